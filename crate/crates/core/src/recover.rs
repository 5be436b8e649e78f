//! Finishing stages: sign disambiguation and exact/noisy weight recovery
//! from an initializer, plus the fixed-parameter path for arbitrary `U`.
//!
//! The exact finishers rest on one structural fact: inside the row span of
//! `A = U f(V X)` the only vectors whose support fits inside a row's
//! support are scalings of that row. Solving "vanish off the support, pivot
//! coordinate pinned to 1" therefore reproduces rows of `f(V X)` exactly,
//! and a final linear solve through `inverse_positive` returns the weights.
//!
//! Floating point needs one concession the real-RAM statements do not: an
//! initializer row only locates the true hyperplane to within some eps, so
//! coordinates inside a band `|v x_j| <= gamma` are treated as "don't care"
//! rather than forced to zero. The band width is found by a deterministic
//! doubling ladder: too small and the true side is over-constrained, too
//! large and both signs become feasible; the first decisive width wins.

use crate::error::{Error, Result};
use crate::init::{init_ica, init_tensor, ScoreConfig, TensorInitReport};
use crate::model::{apply_activation, Activation, NetworkWeights};
use crate::numerics::{self, pinv, rank, solve_exact, Matrix};
use crate::rng::SeedStream;
use crate::signpat::{sign_pattern, SignPattern};
use crate::RANK_TOL;

/// Knobs for the finishing stages; `None` fields resolve to scale-aware
/// defaults.
#[derive(Debug, Clone, Default)]
pub struct RecoveryConfig {
    /// Positivity threshold for pattern extraction; default
    /// `1e-6 * median positive entry`.
    pub tau: Option<f64>,
    /// Column prefix for the finishing systems; default
    /// `min(n, 200 d k ceil(kappa)^2)`.
    pub ell: Option<usize>,
    /// Off-support equality tolerance; default `1e-8 ||Abar||_F / sqrt(m l)`.
    pub zero_tol: Option<f64>,
    /// Known noise level, if any (diagnostic only).
    pub sigma_noise: Option<f64>,
    /// Condition-number hint for the `ell` default.
    pub kappa_hint: Option<f64>,
}

impl RecoveryConfig {
    pub fn resolved_ell(&self, n: usize, d: usize, k: usize) -> usize {
        match self.ell {
            Some(l) => l.min(n),
            None => {
                let kappa = self.kappa_hint.unwrap_or(1.0).max(1.0).ceil();
                n.min(200 * d * k * (kappa * kappa) as usize)
            }
        }
    }

    pub fn resolved_tau(&self, values: &Matrix) -> f64 {
        if let Some(t) = self.tau {
            return t;
        }
        let mut positives: Vec<f64> = values.data().iter().cloned().filter(|&v| v > 0.0).collect();
        if positives.is_empty() {
            return 1e-12;
        }
        positives.sort_by(|a, b| a.partial_cmp(b).unwrap());
        1e-6 * positives[positives.len() / 2]
    }

    pub fn resolved_zero_tol(&self, abar: &Matrix) -> f64 {
        match self.zero_tol {
            Some(z) => z,
            None => {
                let (m, l) = (abar.rows(), abar.cols());
                1e-8 * abar.frob_norm() / ((m * l) as f64).sqrt()
            }
        }
    }
}

/// Resolved per-row signs plus the support pattern of the accepted side.
#[derive(Debug, Clone)]
pub struct SignResolution {
    pub xi: Vec<f64>,
    pub feasible_pattern: Vec<SignPattern>,
}

/// Minimum of `||w Abar_C||` over `w` with `w_r = 1`, where `C` indexes the
/// constrained columns. Returns `(w, residual)`.
fn pivot_least_squares(abar: &Matrix, constrained: &[usize], r: usize) -> (Vec<f64>, f64) {
    let m = abar.rows();
    let sub = abar.select_cols(constrained);
    // Gram matrix of the constrained columns
    let gram = sub.matmul(&sub.transpose());
    // minimize (e_r + wt)^T G (e_r + wt) over wt with wt_r = 0
    let others: Vec<usize> = (0..m).filter(|&i| i != r).collect();
    if others.is_empty() {
        let value = gram[(r, r)].max(0.0);
        return (vec![1.0], value.sqrt());
    }
    let mut gtilde = Matrix::zeros(others.len(), others.len());
    let mut rhs = Matrix::zeros(others.len(), 1);
    for (a, &i) in others.iter().enumerate() {
        rhs[(a, 0)] = -gram[(i, r)];
        for (b, &j) in others.iter().enumerate() {
            gtilde[(a, b)] = gram[(i, j)];
        }
    }
    let (wt, _) = solve_exact(&gtilde, &rhs);
    let mut w = vec![0.0; m];
    w[r] = 1.0;
    for (a, &i) in others.iter().enumerate() {
        w[i] = wt[(a, 0)];
    }
    let value: f64 = {
        let prod = sub.left_mul_vec(&w);
        prod.iter().map(|v| v * v).sum::<f64>()
    };
    (w, value.max(0.0).sqrt())
}

/// First pivot `r < k_scan` whose system is feasible at the relative
/// tolerance (residual measured against the candidate row norm); `None` if
/// all residuals exceed it.
fn first_feasible_pivot(
    basis: &Matrix,
    constrained: &[usize],
    k_scan: usize,
    rel_tol: f64,
) -> Option<Vec<f64>> {
    for r in 0..k_scan.min(basis.rows()) {
        let (c, residual) = pivot_least_squares(basis, constrained, r);
        let scale = c.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        if residual <= rel_tol * scale {
            return Some(c);
        }
    }
    None
}

/// Relative feasibility tolerance for the row-space systems; reduces to
/// 1e-8 at the default `zero_tol` and scales with a caller override.
fn rel_feas_tol(cfg: &RecoveryConfig, abar: &Matrix) -> f64 {
    let (m, l) = (abar.rows(), abar.cols());
    let scale = abar.frob_norm().max(1e-300);
    cfg.resolved_zero_tol(abar) * ((l * m) as f64).sqrt() / scale
}

/// Orients `w` so `w Abar` is nonnegative on its support and returns the
/// row values.
fn oriented_row(abar: &Matrix, w: &mut [f64]) -> Vec<f64> {
    let mut vals = abar.left_mul_vec(w);
    let balance: f64 = vals.iter().sum();
    if balance < 0.0 {
        for v in w.iter_mut() {
            *v = -*v;
        }
        for v in vals.iter_mut() {
            *v = -*v;
        }
    }
    vals
}

/// Recovers the unit `V` row whose rectified image is the (positively
/// scaled) values in `row_vals`: solve `z Xbar_S = inverse_positive(vals_S)`
/// over the confident support and normalize.
fn row_from_values(
    xbar: &Matrix,
    row_vals: &[f64],
    f: &Activation,
    support_floor: f64,
) -> Result<Vec<f64>> {
    let support: Vec<usize> = row_vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > support_floor)
        .map(|(j, _)| j)
        .collect();
    if support.len() < xbar.rows() {
        return Err(Error::NumericalFailure(format!(
            "support of size {} cannot determine a {}-dimensional row",
            support.len(),
            xbar.rows()
        )));
    }
    let xs = xbar.select_cols(&support);
    let mut rhs = Matrix::zeros(support.len(), 1);
    for (t, &j) in support.iter().enumerate() {
        rhs[(t, 0)] = f.inverse_positive(row_vals[j]);
    }
    let (z, _) = solve_exact(&xs.transpose(), &rhs);
    let mut row: Vec<f64> = (0..xbar.rows()).map(|i| z[(i, 0)]).collect();
    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 0.0 {
        return Err(Error::ZeroMatrix);
    }
    for v in row.iter_mut() {
        *v /= norm;
    }
    Ok(row)
}

/// The gamma ladder: margin widths tried in order.
fn margin_ladder() -> impl Iterator<Item = f64> {
    (0..18).map(|t| 1e-9 * 4.0f64.powi(t))
}

/// A recovered row is only accepted when its rectified image reproduces the
/// row-space values it was solved from (up to one positive scale). This
/// rejects the degenerate solutions that appear when a constraint set
/// carries no information (e.g. only columns where `A` itself vanishes).
fn verify_row_values(xbar: &Matrix, row: &[f64], vals: &[f64], f: &Activation) -> bool {
    let rect: Vec<f64> = xbar
        .transpose()
        .mul_vec(row)
        .into_iter()
        .map(|v| f.forward(v))
        .collect();
    let dot: f64 = rect.iter().zip(vals).map(|(a, b)| a * b).sum();
    let nr2: f64 = rect.iter().map(|v| v * v).sum();
    if dot <= 0.0 || nr2 <= 0.0 {
        return false;
    }
    let c = dot / nr2;
    let nv: f64 = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
    let resid: f64 = rect
        .iter()
        .zip(vals)
        .map(|(r, v)| {
            let d = v - c * r;
            d * d
        })
        .sum::<f64>()
        .sqrt();
    resid <= 1e-6 * nv.max(1e-300)
}

/// Exact sign disambiguation and row recovery in the noiseless case.
///
/// For each input row `v_i` (an approximation of `xi_i V*_i` for unknown
/// `xi_i`), both signs are tested: the side whose off-support system
/// `(w Abar)_j = 0` admits a pivot solution is the true one; both sides
/// feasible is `AmbiguousSign` and neither (at every ladder width)
/// `NoFeasibleSign`. The accepted solution reproduces the row of `f(V* X)`
/// exactly, and a solve through `inverse_positive` returns the exact `V` row.
pub fn recover_signs_exact(
    a: &Matrix,
    x: &Matrix,
    rows: &Matrix,
    f: &Activation,
    cfg: &RecoveryConfig,
) -> Result<Matrix> {
    let k = rows.rows();
    let d = x.rows();
    let ell = cfg.resolved_ell(x.cols(), d, k);
    let abar = a.prefix_cols(ell);
    let xbar = x.prefix_cols(ell);
    // Candidate row vectors live in the row space of Abar; for m > k the
    // ambient left null space would make every vanishing system feasible,
    // so the pivot systems run on an orthonormal row basis instead.
    let basis = numerics::row_space_basis(&abar);
    let feas_tol = rel_feas_tol(cfg, &abar);

    let mut v = Matrix::zeros(k, d);
    for i in 0..k {
        let proj = xbar.transpose().mul_vec(rows.row(i)); // (v_i Xbar)^T
        let mut resolved = false;
        for gamma in margin_ladder() {
            // constrained columns per side: confidently negative under that
            // sign hypothesis
            let plus_set: Vec<usize> = (0..ell).filter(|&j| proj[j] <= -gamma).collect();
            let minus_set: Vec<usize> = (0..ell).filter(|&j| proj[j] >= gamma).collect();
            if plus_set.len() < d || minus_set.len() < d {
                break; // margin swallowed a half-space; no decision possible
            }
            let plus = first_feasible_pivot(&basis, &plus_set, k, feas_tol);
            let minus = first_feasible_pivot(&basis, &minus_set, k, feas_tol);
            match (plus, minus) {
                (Some(_), Some(_)) => return Err(Error::AmbiguousSign(i)),
                (None, None) => continue,
                (side_plus, side_minus) => {
                    let (mut w, xi) = if let Some(w) = side_plus {
                        (w, 1.0)
                    } else {
                        (side_minus.unwrap(), -1.0)
                    };
                    let vals = oriented_row(&basis, &mut w);
                    let tau = cfg.resolved_tau(&Matrix::row_vector(&vals));
                    let row = row_from_values(&xbar, &vals, f, tau)?;
                    if !verify_row_values(&xbar, &row, &vals, f) {
                        continue; // degenerate acceptance; widen the margin
                    }
                    // orient along the hypothesized sign
                    let cos: f64 = row
                        .iter()
                        .zip(rows.row(i))
                        .map(|(a, b)| a * b * xi)
                        .sum();
                    let flip = if cos < 0.0 { -1.0 } else { 1.0 };
                    for (t, val) in row.iter().enumerate() {
                        v[(i, t)] = flip * val;
                    }
                    resolved = true;
                }
            }
            if resolved {
                break;
            }
        }
        if !resolved {
            return Err(Error::NoFeasibleSign(i));
        }
    }
    Ok(v)
}

/// Rows of `f(V Xbar)` from exact support patterns: for each pattern, the
/// first pivot whose off-support system has a solution yields the row,
/// sign-flipped to be nonnegative.
pub fn recover_pattern_rows(
    abar: &Matrix,
    patterns: &[SignPattern],
    cfg: &RecoveryConfig,
) -> Result<Matrix> {
    let ell = abar.cols();
    let basis = numerics::row_space_basis(abar);
    let feas_tol = rel_feas_tol(cfg, abar);
    let k = patterns.len();
    let mut out = Matrix::zeros(k, ell);
    for (idx, pat) in patterns.iter().enumerate() {
        if pat.is_empty() {
            return Err(Error::NoSolution(idx));
        }
        let constrained = pat.complement_indices();
        let Some(mut w) =
            first_feasible_pivot(&basis, &constrained, k.max(basis.rows()), feas_tol)
        else {
            return Err(Error::NoSolution(idx));
        };
        let vals = oriented_row(&basis, &mut w);
        out.row_mut(idx).copy_from_slice(&vals);
    }
    Ok(out)
}

/// Least-squares `U` from `A = U f(V X)`; the hidden layer must have full
/// row rank.
pub fn solve_u(a: &Matrix, x: &Matrix, v: &Matrix, f: &Activation) -> Result<(Matrix, f64)> {
    let hidden = apply_activation(f, &v.matmul(x));
    if rank(&hidden, RANK_TOL) < v.rows() {
        return Err(Error::RankDeficientHidden);
    }
    let u = a.matmul(&pinv(&hidden, RANK_TOL));
    let residual = u.matmul(&hidden).sub(a).frob_norm();
    Ok((u, residual))
}

/// Regression solve for `U` in the noisy pipeline; the contract matches
/// [`solve_u`], kept under its own name so noisy-path diagnostics read
/// separately.
pub fn regress_u(a: &Matrix, x: &Matrix, v: &Matrix, f: &Activation) -> Result<(Matrix, f64)> {
    solve_u(a, x, v, f)
}

/// Exact recovery for orthonormal `V*`: ICA sketch of `U`, invert, threshold
/// to support patterns, pattern systems for the rows of `f(V Xbar)`, then
/// per-row solves through `inverse_positive` and a final `U` solve.
///
/// The literal threshold patterns are tried first; rows whose pattern
/// system is infeasible (the float-precision case) fall back to a
/// regression + margin-ladder refinement of the same systems.
pub fn recover_orthonormal(
    a: &Matrix,
    x: &Matrix,
    k: usize,
    f: &Activation,
    cfg: &RecoveryConfig,
    stream: &mut SeedStream,
) -> Result<NetworkWeights> {
    let d = x.rows();
    let ell = cfg.resolved_ell(x.cols(), d, k);
    let abar = a.prefix_cols(ell);
    let xbar = x.prefix_cols(ell);
    let basis = numerics::row_space_basis(&abar);
    let feas_tol = rel_feas_tol(cfg, &abar);

    let (sketch, mut mixing) = init_ica(a, k, stream)?;
    if numerics::cond_number(&mixing).map_or(true, |c| c > 1e12) {
        // near-singular estimate: nudge entries to admit an inverse
        for i in 0..k {
            mixing[(i, i)] += 1e-12;
        }
    }
    let z = pinv(&mixing, RANK_TOL).matmul(&sketch.matmul(&abar));

    let mut v = Matrix::zeros(k, d);
    for i in 0..k {
        let zrow = Matrix::row_vector(z.row(i));
        let tau = cfg.resolved_tau(&zrow);
        // literal path: threshold at tau, solve the pattern system
        let pattern = sign_pattern(z.row(i), tau);
        let literal = (|| -> Result<Vec<f64>> {
            if pattern.is_empty() {
                return Err(Error::NoSolution(i));
            }
            let constrained = pattern.complement_indices();
            let mut w = first_feasible_pivot(&basis, &constrained, k, feas_tol)
                .ok_or(Error::NoSolution(i))?;
            let vals = oriented_row(&basis, &mut w);
            let row =
                row_from_values(&xbar, &vals, f, cfg.resolved_tau(&Matrix::row_vector(&vals)))?;
            if !verify_row_values(&xbar, &row, &vals, f) {
                return Err(Error::NoSolution(i));
            }
            Ok(row)
        })();
        let row = match literal {
            Ok(row) => row,
            Err(e) => {
                if std::env::var("RELUREC_DEBUG").is_ok() {
                    eprintln!("literal path failed for row {i}: {e:?}");
                }
                // regression refinement: direction from confident positives,
                // then the margin ladder
                let positives: Vec<f64> =
                    z.row(i).iter().cloned().filter(|&v| v > 0.0).collect();
                if positives.is_empty() {
                    return Err(Error::NoFeasibleSign(i));
                }
                let mut sorted = positives.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let scale = sorted[(sorted.len() as f64 * 0.6) as usize];
                let confident: Vec<usize> = (0..ell)
                    .filter(|&j| z[(i, j)] > 0.3 * scale)
                    .collect();
                if confident.len() < d {
                    return Err(Error::NoFeasibleSign(i));
                }
                let xs = xbar.select_cols(&confident);
                let mut rhs = Matrix::zeros(confident.len(), 1);
                for (t, &j) in confident.iter().enumerate() {
                    rhs[(t, 0)] = f.inverse_positive(z[(i, j)]);
                }
                let (dir, _) = solve_exact(&xs.transpose(), &rhs);
                let dir: Vec<f64> = (0..d).map(|r| dir[(r, 0)]).collect();
                exact_row_from_direction(&basis, &xbar, &dir, f, k, feas_tol, cfg)?
            }
        };
        v.row_mut(i).copy_from_slice(&row);
    }

    let (u, _) = solve_u(a, x, &v, f)?;
    NetworkWeights::new(u, v)
}

/// Margin-ladder recovery of the exact row whose hyperplane is approximated
/// by `dir` (sign already known to be positive).
fn exact_row_from_direction(
    basis: &Matrix,
    xbar: &Matrix,
    dir: &[f64],
    f: &Activation,
    k_scan: usize,
    feas_tol: f64,
    cfg: &RecoveryConfig,
) -> Result<Vec<f64>> {
    let ell = basis.cols();
    let d = xbar.rows();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let unit: Vec<f64> = dir.iter().map(|v| v / norm).collect();
    let proj = xbar.transpose().mul_vec(&unit);
    for gamma in margin_ladder() {
        let constrained: Vec<usize> = (0..ell).filter(|&j| proj[j] <= -gamma).collect();
        if constrained.len() < d {
            break;
        }
        if let Some(mut w) = first_feasible_pivot(basis, &constrained, k_scan, feas_tol) {
            let vals = oriented_row(basis, &mut w);
            let tau = cfg.resolved_tau(&Matrix::row_vector(&vals));
            let row = row_from_values(xbar, &vals, f, tau)?;
            if verify_row_values(xbar, &row, &vals, f) {
                return Ok(row);
            }
        }
    }
    Err(Error::NoFeasibleSign(0))
}

/// Projection-comparison sign resolution under i.i.d. noise: for each row,
/// compare the energy of `Abar` left outside the span of the rectified
/// candidates with `+v_i` versus `-v_i`; the smaller leftover wins.
pub fn recover_signs_noisy(
    a: &Matrix,
    x: &Matrix,
    rows: &Matrix,
    cfg: &RecoveryConfig,
) -> Result<SignResolution> {
    let k = rows.rows();
    let d = x.rows();
    let ell = cfg.resolved_ell(x.cols(), d, k);
    let abar = a.prefix_cols(ell);
    let xbar = x.prefix_cols(ell);

    // rectified images of +-v_j for all rows
    let vx = rows.matmul(&xbar);
    let plus = vx.map(|v| v.max(0.0));
    let minus = vx.map(|v| (-v).max(0.0));

    let mut xi = vec![0.0; k];
    let mut feasible_pattern = Vec::with_capacity(k);
    for i in 0..k {
        let mut leftover = [0.0f64; 2];
        for (side, slot) in [(&plus, 0usize), (&minus, 1usize)] {
            // span set: both signs of every other row, plus this row's side
            let mut stack: Vec<Vec<f64>> = Vec::with_capacity(2 * k - 1);
            for j in 0..k {
                if j != i {
                    stack.push(plus.row(j).to_vec());
                    stack.push(minus.row(j).to_vec());
                }
            }
            stack.push(side.row(i).to_vec());
            let basis = numerics::row_space_basis(&Matrix::from_rows(&stack));
            // sum over rows of ||Abar_j (I - P)||^2 without forming P
            let mut total = 0.0;
            for r in 0..abar.rows() {
                let arow = abar.row(r);
                let full: f64 = arow.iter().map(|v| v * v).sum();
                let coeffs = basis.matmul(&Matrix::col_vector(arow));
                let inside: f64 = coeffs.data().iter().map(|v| v * v).sum();
                total += (full - inside).max(0.0);
            }
            leftover[slot] = total;
        }
        xi[i] = if leftover[0] < leftover[1] { 1.0 } else { -1.0 };
        let chosen = if xi[i] > 0.0 {
            plus.row(i)
        } else {
            minus.row(i)
        };
        let tau = cfg.resolved_tau(&Matrix::row_vector(chosen));
        feasible_pattern.push(sign_pattern(chosen, tau));
    }
    Ok(SignResolution {
        xi,
        feasible_pattern,
    })
}

/// Noiseless pipeline: tensor initializer, exact sign resolution, `U` solve.
pub fn recover_exact(
    a: &Matrix,
    x: &Matrix,
    k: usize,
    f: &Activation,
    cfg: &RecoveryConfig,
    stream: &mut SeedStream,
) -> Result<NetworkWeights> {
    let score = ScoreConfig::for_activation(f);
    let report = init_tensor(a, x, k, &score, stream)?;
    finish_exact_from_init(a, x, &report, f, cfg)
}

/// Exact finish from any initializer report (tensor or oracle).
pub fn finish_exact_from_init(
    a: &Matrix,
    x: &Matrix,
    report: &TensorInitReport,
    f: &Activation,
    cfg: &RecoveryConfig,
) -> Result<NetworkWeights> {
    let v = recover_signs_exact(a, x, &report.rows, f, cfg)?;
    let (u, _) = solve_u(a, x, &v, f)?;
    NetworkWeights::new(u, v)
}

/// Noisy pipeline: tensor initializer, projection-based sign resolution,
/// regression for `U`. `V` keeps the initializer's accuracy.
pub fn recover_noisy(
    a: &Matrix,
    x: &Matrix,
    k: usize,
    f: &Activation,
    cfg: &RecoveryConfig,
    stream: &mut SeedStream,
) -> Result<NetworkWeights> {
    let score = ScoreConfig::for_activation(f);
    let report = init_tensor(a, x, k, &score, stream)?;
    finish_noisy_from_init(a, x, &report, f, cfg)
}

/// Noisy finish from any initializer report.
pub fn finish_noisy_from_init(
    a: &Matrix,
    x: &Matrix,
    report: &TensorInitReport,
    f: &Activation,
    cfg: &RecoveryConfig,
) -> Result<NetworkWeights> {
    let resolution = recover_signs_noisy(a, x, &report.rows, cfg)?;
    let mut v = report.rows.clone();
    for i in 0..v.rows() {
        if resolution.xi[i] < 0.0 {
            for val in v.row_mut(i) {
                *val = -*val;
            }
        }
    }
    let (u, _) = regress_u(a, x, &v, f)?;
    NetworkWeights::new(u, v)
}

/// Fixed-parameter exact recovery for arbitrary `U*` (no two columns
/// nonnegative multiples of each other).
///
/// Columns of `A` that are positive scalings of one another are exactly the
/// images of 1-sparse columns of `f(V* X)` when `m >= 2`; clustering them by
/// direction yields the `U` columns and per-column scalings, each `V` row
/// follows from a linear solve through `inverse_positive`, and a final `U`
/// solve closes the loop. Degenerate directions (the `[u, -u]` and `m = 1`
/// cases, where distinct neurons share a line) are split by a seeded
/// consensus search for maximal consistent linear subsystems, and the
/// candidate set is pruned by the functional residual of the assembled
/// network.
pub fn fpt_exact_arbitrary_u(
    a: &Matrix,
    x: &Matrix,
    k: usize,
    f: &Activation,
    tol_match: f64,
    stream: &mut SeedStream,
) -> Result<NetworkWeights> {
    let m = a.rows();
    let n = a.cols();
    let d = x.rows();

    // 1. bucket nonzero columns by canonical direction
    let mut max_norm = 0.0f64;
    let mut norms = vec![0.0f64; n];
    for (j, nj) in norms.iter_mut().enumerate() {
        *nj = a.col_norm(j);
        max_norm = max_norm.max(*nj);
    }
    if max_norm <= 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let quant = (1.0 / tol_match).min(1e9);
    let mut buckets: std::collections::BTreeMap<Vec<i64>, Vec<(usize, f64)>> =
        std::collections::BTreeMap::new();
    for j in 0..n {
        if norms[j] <= 1e-12 * max_norm {
            continue;
        }
        let mut unit: Vec<f64> = (0..m).map(|r| a[(r, j)] / norms[j]).collect();
        // canonical sign: largest-magnitude coordinate positive
        let lead = (0..m)
            .max_by(|&p, &q| unit[p].abs().partial_cmp(&unit[q].abs()).unwrap())
            .unwrap();
        let sign = if unit[lead] < 0.0 { -1.0 } else { 1.0 };
        for u in unit.iter_mut() {
            *u *= sign;
        }
        let key: Vec<i64> = unit.iter().map(|&u| (u * quant).round() as i64).collect();
        buckets.entry(key).or_default().push((j, sign * norms[j]));
    }

    // 2. line clusters with at least two members, split by scaling sign
    let mut subclusters: Vec<Vec<(usize, f64)>> = Vec::new();
    for members in buckets.into_values() {
        if members.len() < 2 {
            continue;
        }
        let plus: Vec<(usize, f64)> = members
            .iter()
            .filter(|(_, c)| *c > 0.0)
            .map(|&(j, c)| (j, c))
            .collect();
        let minus: Vec<(usize, f64)> = members
            .iter()
            .filter(|(_, c)| *c < 0.0)
            .map(|&(j, c)| (j, -c))
            .collect();
        for sub in [plus, minus] {
            if sub.len() >= d {
                subclusters.push(sub);
            }
        }
    }
    if subclusters.is_empty() {
        return Err(Error::TooFewClusters { found: 0, need: k });
    }

    // 3. consistent-subsystem extraction per subcluster: hypotheses
    //    w x_j = inverse_positive(scale_j) with a seeded consensus search.
    //    A hypothesis always fits its own d defining members, so the
    //    acceptance bar scales with the subcluster size; a cheap subsample
    //    screen keeps the trial loop fast.
    let mut candidates: Vec<(usize, Vec<f64>)> = Vec::new();
    let cons_tol = 1e-6;
    for sub in &subclusters {
        let targets: Vec<f64> = sub.iter().map(|&(_, c)| f.inverse_positive(c)).collect();
        let screen: Vec<usize> = if sub.len() <= 64 {
            (0..sub.len()).collect()
        } else {
            (0..64).map(|_| stream.next_index(sub.len())).collect()
        };
        let need_consensus = (d + 2).max(sub.len() / 50);
        let mut found: Vec<(usize, Vec<f64>)> = Vec::new();
        let trials = 2048usize;
        for _ in 0..trials {
            // sample d distinct members
            let mut pick = Vec::with_capacity(d);
            while pick.len() < d {
                let c = stream.next_index(sub.len());
                if !pick.contains(&c) {
                    pick.push(c);
                }
            }
            let mut sys = Matrix::zeros(d, d);
            let mut rhs = Matrix::zeros(d, 1);
            for (row, &p) in pick.iter().enumerate() {
                let (j, _) = sub[p];
                for t in 0..d {
                    sys[(row, t)] = x[(t, j)];
                }
                rhs[(row, 0)] = targets[p];
            }
            let (w, res) = solve_exact(&sys, &rhs);
            if res > 1e-6 {
                continue;
            }
            let w: Vec<f64> = (0..d).map(|t| w[(t, 0)]).collect();
            let agrees = |p: usize| -> bool {
                let (j, _) = sub[p];
                let pred: f64 = (0..d).map(|t| w[t] * x[(t, j)]).sum();
                (pred - targets[p]).abs() <= cons_tol * targets[p].abs().max(1.0)
            };
            // screen on the subsample before the full count
            let screen_hits = screen.iter().filter(|&&p| agrees(p)).count();
            if screen_hits * 10 < screen.len() {
                continue;
            }
            let consensus = (0..sub.len()).filter(|&p| agrees(p)).count();
            if consensus < need_consensus {
                continue;
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= 0.0 {
                continue;
            }
            let unit: Vec<f64> = w.iter().map(|v| v / norm).collect();
            let mut fresh = true;
            for (seen_cons, seen) in found.iter_mut() {
                let cos: f64 = seen.iter().zip(&unit).map(|(a, b)| a * b).sum();
                if cos.abs() >= 1.0 - 1e-6 {
                    fresh = false;
                    if consensus > *seen_cons {
                        *seen_cons = consensus;
                        *seen = unit.clone();
                    }
                    break;
                }
            }
            if fresh {
                found.push((consensus, unit));
            }
            if found.len() >= 6 {
                break;
            }
        }
        candidates.extend(found);
    }
    // dedupe across subclusters, strongest consensus first
    candidates.sort_by(|a, b| b.0.cmp(&a.0));
    let mut unique: Vec<Vec<f64>> = Vec::new();
    for (_, c) in candidates {
        if unique.iter().all(|seen| {
            let cos: f64 = seen.iter().zip(&c).map(|(a, b)| a * b).sum();
            cos.abs() < 1.0 - 1e-6
        }) {
            unique.push(c);
        }
    }
    if unique.len() < k {
        return Err(Error::TooFewClusters {
            found: unique.len(),
            need: k,
        });
    }
    if unique.len() > 12 {
        unique.truncate(12);
    }

    // 4. pick the k-subset whose assembled network reproduces A
    let tol = 1e-6 * a.frob_norm().max(1.0);
    let idx: Vec<usize> = (0..unique.len()).collect();
    let mut best: Option<(f64, NetworkWeights)> = None;
    let mut choose = vec![0usize; k];
    fn subsets(
        idx: &[usize],
        k: usize,
        at: usize,
        start: usize,
        choose: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if at == k {
            visit(choose);
            return;
        }
        for s in start..idx.len() {
            choose[at] = idx[s];
            subsets(idx, k, at + 1, s + 1, choose, visit);
        }
    }
    let mut evaluate = |subset: &[usize]| {
        let mut v = Matrix::zeros(k, d);
        for (r, &c) in subset.iter().enumerate() {
            v.row_mut(r).copy_from_slice(&unique[c]);
        }
        if let Ok((u, _)) = solve_u(a, x, &v, f) {
            if let Ok(w) = NetworkWeights::new(u, v) {
                let err = w.forward(f, x).sub(a).frob_norm();
                if best.as_ref().map_or(true, |(b, _)| err < *b) {
                    best = Some((err, w));
                }
            }
        }
    };
    subsets(&idx, k, 0, 0, &mut choose, &mut evaluate);
    match best {
        Some((err, w)) if err <= tol => Ok(w),
        _ => Err(Error::NoRealization),
    }
}
