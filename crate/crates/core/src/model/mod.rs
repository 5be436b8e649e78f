//! Activations, weight/instance generation, noise models, covariance
//! handling, and bit-stable matrix file I/O.

pub mod io;

use crate::error::{Error, Result};
use crate::numerics::{self, gaussian_matrix, Matrix};
use crate::rng::SeedStream;
use crate::RANK_TOL;

/// Rectified activation: `f(x) = 0` for `x <= 0`, `phi(x) > 0` otherwise.
///
/// `inverse_positive` inverts `phi` on the positive half-line; it is what
/// lets the recovery pipelines pull values back through `f` once the sign
/// pattern is known.
#[derive(Debug, Clone)]
pub enum Activation {
    Relu,
    /// `phi(x) = x^c` for a positive exponent.
    Power(f64),
    /// `phi(x) = e^x - 1`; not multiplicative, so positive scalings do not
    /// pull through `f`.
    Expm1,
    Custom {
        name: &'static str,
        forward: fn(f64) -> f64,
        inverse_positive: fn(f64) -> f64,
    },
}

impl Activation {
    pub fn forward(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            Activation::Relu => x,
            Activation::Power(c) => x.powf(*c),
            Activation::Expm1 => x.exp_m1(),
            Activation::Custom { forward, .. } => forward(x),
        }
    }

    /// Inverse of `phi` on (0, inf); identity below zero for convenience.
    pub fn inverse_positive(&self, y: f64) -> f64 {
        match self {
            Activation::Relu => y,
            Activation::Power(c) => {
                if y > 0.0 {
                    y.powf(1.0 / *c)
                } else {
                    y
                }
            }
            Activation::Expm1 => {
                if y > 0.0 {
                    y.ln_1p()
                } else {
                    y
                }
            }
            Activation::Custom {
                inverse_positive, ..
            } => inverse_positive(y),
        }
    }

    /// True when positive scalings pull through `f` (ReLU and powers);
    /// false for expm1. Pipelines use this to decide whether diagonal
    /// scalings can be absorbed into `U`.
    pub fn scaling_commutes(&self) -> bool {
        matches!(self, Activation::Relu | Activation::Power(_))
    }

    pub fn name(&self) -> String {
        match self {
            Activation::Relu => "relu".into(),
            Activation::Power(c) => format!("power({c})"),
            Activation::Expm1 => "expm1".into(),
            Activation::Custom { name, .. } => (*name).into(),
        }
    }

    pub fn parse(s: &str) -> Result<Activation> {
        let t = s.trim();
        if t == "relu" {
            return Ok(Activation::Relu);
        }
        if t == "expm1" {
            return Ok(Activation::Expm1);
        }
        if let Some(rest) = t.strip_prefix("power(") {
            if let Some(num) = rest.strip_suffix(')') {
                let c: f64 = num
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad power exponent {num:?}")))?;
                if c <= 0.0 {
                    return Err(Error::Parse("power exponent must be positive".into()));
                }
                return Ok(Activation::Power(c));
            }
        }
        Err(Error::Parse(format!("unknown activation {s:?}")))
    }
}

impl PartialEq for Activation {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Activation::Relu, Activation::Relu) => true,
            (Activation::Power(a), Activation::Power(b)) => a == b,
            (Activation::Expm1, Activation::Expm1) => true,
            // custom activations compare by name
            (Activation::Custom { name: a, .. }, Activation::Custom { name: b, .. }) => a == b,
            _ => false,
        }
    }
}

/// Entrywise application of the activation.
pub fn apply_activation(f: &Activation, m: &Matrix) -> Matrix {
    m.map(|x| f.forward(x))
}

/// The recovery target: `u` (m x k) and `v` (k x d) with unit-norm rows of
/// `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights {
    pub u: Matrix,
    pub v: Matrix,
}

impl NetworkWeights {
    /// Validates shapes and the unit-row-norm convention on `v`.
    pub fn new(u: Matrix, v: Matrix) -> Result<Self> {
        if u.cols() != v.rows() || v.rows() == 0 {
            return Err(Error::InvalidShape(format!(
                "u is {}x{}, v is {}x{}",
                u.rows(),
                u.cols(),
                v.rows(),
                v.cols()
            )));
        }
        for i in 0..v.rows() {
            if (v.row_norm(i) - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidShape(format!(
                    "row {i} of v has norm {}, want 1",
                    v.row_norm(i)
                )));
            }
        }
        Ok(NetworkWeights { u, v })
    }

    pub fn k(&self) -> usize {
        self.v.rows()
    }

    /// `U f(V X)`.
    pub fn forward(&self, f: &Activation, x: &Matrix) -> Matrix {
        self.u.matmul(&apply_activation(f, &self.v.matmul(x)))
    }
}

/// Normalizes rows of `v` to unit norm, scaling columns of `u` to
/// compensate (valid whenever the activation commutes with positive
/// scalings).
pub fn normalize_rows_absorbing(u: &Matrix, v: &Matrix, f: &Activation) -> Result<NetworkWeights> {
    let mut vn = v.clone();
    let mut un = u.clone();
    for i in 0..v.rows() {
        let norm = v.row_norm(i);
        if norm <= 0.0 {
            return Err(Error::ZeroMatrix);
        }
        for x in vn.row_mut(i) {
            *x /= norm;
        }
        // f(norm * t) = factor * f(t) entrywise
        let factor = match f {
            Activation::Relu => norm,
            Activation::Power(c) => norm.powf(*c),
            _ => {
                return Err(Error::InvalidShape(
                    "cannot absorb row scalings through a non-multiplicative activation".into(),
                ))
            }
        };
        for r in 0..u.rows() {
            un[(r, i)] *= factor;
        }
    }
    NetworkWeights::new(un, vn)
}

/// Noise attached to a generated instance.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    None,
    /// I.i.d. mean-zero entries with standard deviation `sigma`.
    Iid { sigma: f64, dist: IidDist },
    /// Exactly `round(fraction * m * n)` entries of size `magnitude` with
    /// random signs, uniform support.
    Sparse { fraction: f64, magnitude: f64 },
    /// Fixed matrix supplied by the caller (must match the output shape).
    Arbitrary(Matrix),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IidDist {
    Gaussian,
    /// +-sigma with equal probability (scaled Rademacher).
    Rademacher,
}

impl NoiseModel {
    pub fn describe(&self) -> String {
        match self {
            NoiseModel::None => "none".into(),
            NoiseModel::Iid { sigma, dist } => match dist {
                IidDist::Gaussian => format!("gaussian:{sigma}"),
                IidDist::Rademacher => format!("rademacher:{sigma}"),
            },
            NoiseModel::Sparse {
                fraction,
                magnitude,
            } => format!("sparse:{fraction}:{magnitude}"),
            NoiseModel::Arbitrary(_) => "arbitrary".into(),
        }
    }

    pub fn parse(s: &str) -> Result<NoiseModel> {
        let t = s.trim();
        if t == "none" {
            return Ok(NoiseModel::None);
        }
        let parts: Vec<&str> = t.split(':').collect();
        match parts[0] {
            "gaussian" | "iid" => {
                let sigma: f64 = parts
                    .get(1)
                    .ok_or_else(|| Error::Parse("gaussian noise needs sigma".into()))?
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad sigma in {s:?}")))?;
                Ok(NoiseModel::Iid {
                    sigma,
                    dist: IidDist::Gaussian,
                })
            }
            "rademacher" => {
                let sigma: f64 = parts
                    .get(1)
                    .ok_or_else(|| Error::Parse("rademacher noise needs sigma".into()))?
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad sigma in {s:?}")))?;
                Ok(NoiseModel::Iid {
                    sigma,
                    dist: IidDist::Rademacher,
                })
            }
            "sparse" => {
                let fraction: f64 = parts
                    .get(1)
                    .ok_or_else(|| Error::Parse("sparse noise needs fraction".into()))?
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad fraction in {s:?}")))?;
                let magnitude: f64 = parts
                    .get(2)
                    .ok_or_else(|| Error::Parse("sparse noise needs magnitude".into()))?
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad magnitude in {s:?}")))?;
                if !(0.0..=1.0).contains(&fraction) {
                    return Err(Error::Parse("sparse fraction must be in [0,1]".into()));
                }
                Ok(NoiseModel::Sparse {
                    fraction,
                    magnitude,
                })
            }
            _ => Err(Error::Parse(format!("unknown noise model {s:?}"))),
        }
    }
}

/// A generated problem: inputs, labels, noise, ground truth and provenance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub x: Matrix,
    pub a: Matrix,
    pub e: Matrix,
    pub weights: NetworkWeights,
    pub activation: Activation,
    pub noise: NoiseModel,
    pub seed: SeedStream,
    pub covariance: Option<Matrix>,
}

/// How to build `U` in `generate_weights`.
#[derive(Debug, Clone)]
pub enum UMode {
    /// Gaussian m x k (full column rank almost surely); requires `k <= m`.
    FullRank,
    /// Caller-supplied `U`, any rank; enables the m < k regimes.
    Fixed(Matrix),
    /// Orthonormal columns via the left SVD factor of a Gaussian
    /// (incoherent w.h.p.); requires `k <= m`.
    Orthonormal,
}

/// Generates weights with `V` built from a log-spaced spectrum between 1 and
/// `1/target_kappa` via random orthogonal factors, rows then normalized to
/// unit norm. Normalization perturbs the spectrum, so the achieved
/// condition number is reported alongside.
pub fn generate_weights(
    m: usize,
    k: usize,
    d: usize,
    target_kappa: f64,
    u_mode: UMode,
    stream: &mut SeedStream,
) -> Result<(NetworkWeights, f64)> {
    if k == 0 || d == 0 || m == 0 {
        return Err(Error::InvalidShape("zero dimension".into()));
    }
    if k > d {
        return Err(Error::InvalidShape(format!("k = {k} exceeds d = {d}")));
    }
    assert!(target_kappa >= 1.0, "target_kappa must be >= 1");

    let u = match u_mode {
        UMode::FullRank => {
            if k > m {
                return Err(Error::InvalidShape(format!(
                    "k = {k} exceeds m = {m}; use UMode::Fixed for rank-deficient U"
                )));
            }
            gaussian_matrix(m, k, 0.0, 1.0, &mut stream.substream(1))
        }
        UMode::Orthonormal => {
            if k > m {
                return Err(Error::InvalidShape(format!("k = {k} exceeds m = {m}")));
            }
            // Rejection-sample until the leverage scores meet the 3k/m
            // incoherence bound; a single raw draw lands inside it only
            // about a third of the time at the sizes we use.
            let mut us = stream.substream(1);
            let mut best: Option<(f64, Matrix)> = None;
            for _ in 0..256 {
                let g = gaussian_matrix(m, k, 0.0, 1.0, &mut us);
                let q = numerics::svd(&g).left;
                let worst_leverage = (0..m)
                    .map(|i| q.row(i).iter().map(|x| x * x).sum::<f64>())
                    .fold(0.0f64, f64::max);
                if worst_leverage <= 3.0 * k as f64 / m as f64 {
                    best = Some((worst_leverage, q));
                    break;
                }
                if best.as_ref().map_or(true, |(w, _)| worst_leverage < *w) {
                    best = Some((worst_leverage, q));
                }
            }
            best.expect("at least one draw").1
        }
        UMode::Fixed(mat) => {
            if mat.rows() != m || mat.cols() != k {
                return Err(Error::InvalidShape(format!(
                    "fixed U is {}x{}, want {m}x{k}",
                    mat.rows(),
                    mat.cols()
                )));
            }
            mat
        }
    };

    // V = L * diag(spectrum) * R with orthogonal L (k x k) and
    // row-orthonormal R (k x d).
    let mut vs = stream.substream(2);
    let l = numerics::svd(&gaussian_matrix(k, k, 0.0, 1.0, &mut vs)).left;
    let r = numerics::svd(&gaussian_matrix(k, d, 0.0, 1.0, &mut vs)).right;
    let spectrum: Vec<f64> = (0..k)
        .map(|i| {
            if k == 1 {
                1.0
            } else {
                // log-spaced from 1 down to 1/target_kappa
                (-(i as f64) / (k as f64 - 1.0) * target_kappa.ln()).exp()
            }
        })
        .collect();
    let mut v = l.matmul(&Matrix::from_diag(&spectrum)).matmul(&r);
    for i in 0..k {
        let norm = v.row_norm(i);
        if norm <= 0.0 {
            return Err(Error::ZeroMatrix);
        }
        for x in v.row_mut(i) {
            *x /= norm;
        }
    }
    let achieved = numerics::cond_number(&v)?;
    Ok((NetworkWeights::new(u, v)?, achieved))
}

/// Keeps exactly `s` uniformly chosen entries of `base`, zeroing the rest.
pub fn sparse_noise(base: &Matrix, s: usize, stream: &mut SeedStream) -> Matrix {
    let total = base.rows() * base.cols();
    assert!(s <= total, "s exceeds entry count");
    // partial Fisher-Yates to pick s positions
    let mut idx: Vec<usize> = (0..total).collect();
    for i in 0..s {
        let j = i + stream.next_index(total - i);
        idx.swap(i, j);
    }
    let mut out = Matrix::zeros(base.rows(), base.cols());
    for &p in idx.iter().take(s) {
        let (i, j) = (p / base.cols(), p % base.cols());
        out[(i, j)] = base[(i, j)];
    }
    out
}

/// Builds a full instance: Gaussian `X` (optionally with covariance), noise
/// per model, labels `A = U f(V X) + E`.
pub fn generate_instance(
    weights: &NetworkWeights,
    f: &Activation,
    n: usize,
    noise: &NoiseModel,
    stream: &SeedStream,
    covariance: Option<&Matrix>,
) -> Result<Instance> {
    assert!(n >= 1);
    let d = weights.v.cols();
    let m = weights.u.rows();
    let mut xs = stream.substream(10);
    let mut x = gaussian_matrix(d, n, 0.0, 1.0, &mut xs);
    if let Some(sigma) = covariance {
        if sigma.rows() != d || sigma.cols() != d {
            return Err(Error::ShapeMismatch(format!(
                "covariance is {}x{}, want {d}x{d}",
                sigma.rows(),
                sigma.cols()
            )));
        }
        x = matrix_sqrt_psd(sigma)?.matmul(&x);
    }
    let clean = weights.forward(f, &x);
    let mut es = stream.substream(11);
    let e = match noise {
        NoiseModel::None => Matrix::zeros(m, n),
        NoiseModel::Iid { sigma, dist } => {
            assert!(*sigma >= 0.0);
            match dist {
                IidDist::Gaussian => gaussian_matrix(m, n, 0.0, *sigma, &mut es),
                IidDist::Rademacher => {
                    let mut mat = Matrix::zeros(m, n);
                    for i in 0..m {
                        for j in 0..n {
                            mat[(i, j)] = sigma * es.next_sign();
                        }
                    }
                    mat
                }
            }
        }
        NoiseModel::Sparse {
            fraction,
            magnitude,
        } => {
            let s = (fraction * (m * n) as f64).round() as usize;
            let mut base = Matrix::zeros(m, n);
            for i in 0..m {
                for j in 0..n {
                    base[(i, j)] = magnitude * es.next_sign();
                }
            }
            sparse_noise(&base, s, &mut es)
        }
        NoiseModel::Arbitrary(mat) => {
            if mat.rows() != m || mat.cols() != n {
                return Err(Error::ShapeMismatch(format!(
                    "arbitrary noise is {}x{}, want {m}x{n}",
                    mat.rows(),
                    mat.cols()
                )));
            }
            mat.clone()
        }
    };
    let a = clean.add(&e);
    Ok(Instance {
        x,
        a,
        e,
        weights: weights.clone(),
        activation: f.clone(),
        noise: noise.clone(),
        seed: *stream,
        covariance: covariance.cloned(),
    })
}

/// Sample covariance `(1/N) sum x_i x_i^T`; symmetric PSD by construction.
pub fn estimate_covariance(x: &Matrix) -> Matrix {
    let d = x.rows();
    let n = x.cols();
    assert!(n >= 1);
    let mut c = Matrix::zeros(d, d);
    for j in 0..n {
        for p in 0..d {
            let xp = x[(p, j)];
            if xp == 0.0 {
                continue;
            }
            for q in 0..d {
                c[(p, q)] += xp * x[(q, j)];
            }
        }
    }
    c.scale(1.0 / n as f64)
}

/// Symmetric PSD square root via eigendecomposition.
pub fn matrix_sqrt_psd(a: &Matrix) -> Result<Matrix> {
    symmetric_power(a, 0.5)
}

/// `Sigma^{-1/2} x`: whitens columns against an estimated covariance.
pub fn whiten_input(x: &Matrix, sigma_hat: &Matrix) -> Result<Matrix> {
    Ok(symmetric_power(sigma_hat, -0.5)?.matmul(x))
}

fn symmetric_power(a: &Matrix, p: f64) -> Result<Matrix> {
    if a.rows() != a.cols() {
        return Err(Error::InvalidShape("matrix must be square".into()));
    }
    let na = a.to_na();
    let sym = na.symmetric_eigen();
    let n = a.rows();
    let max_ev = sym.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    let mut out = Matrix::zeros(n, n);
    for t in 0..n {
        let ev = sym.eigenvalues[t];
        if p < 0.0 && ev <= RANK_TOL * max_ev.max(1.0) {
            return Err(Error::NumericalFailure(
                "matrix is singular; cannot take a negative power".into(),
            ));
        }
        let scale = if ev <= 0.0 { 0.0 } else { ev.powf(p) };
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += scale * sym.eigenvectors[(i, t)] * sym.eigenvectors[(j, t)];
            }
        }
    }
    Ok(out)
}

/// Divides `a` by its largest column norm; the scale comes back so `U` can
/// be un-normalized later.
pub fn normalize_output(a: &Matrix) -> Result<(Matrix, f64)> {
    let mut best = 0.0f64;
    for j in 0..a.cols() {
        best = best.max(a.col_norm(j));
    }
    if best <= 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok((a.scale(1.0 / best), best))
}

/// Grid estimate of the B-bounded Lipschitz constant of the activation:
/// max slope between adjacent grid points in [-b, b]. A lower bound of the
/// true constant.
pub fn bounded_lipschitz(f: &Activation, b: f64, grid: usize) -> f64 {
    assert!(b > 0.0 && grid >= 2);
    let mut worst = 0.0f64;
    let mut prev_x = -b;
    let mut prev_y = f.forward(prev_x);
    for i in 1..grid {
        let x = -b + 2.0 * b * i as f64 / (grid - 1) as f64;
        let y = f.forward(x);
        worst = worst.max((y - prev_y).abs() / (x - prev_x));
        prev_x = x;
        prev_y = y;
    }
    worst
}
