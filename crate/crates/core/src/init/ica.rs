//! Kurtosis-based independent component analysis for the orthonormal-V
//! route.
//!
//! For orthonormal `V` and Gaussian inputs, the columns of `f(V X)` have
//! i.i.d. rectified-Gaussian entries (2-stability), so `T A = (T U) f(V X)`
//! is a square ICA problem after a rank-preserving Gaussian sketch `T`.
//! Deflationary fixed-point iterations on the whitened, centered samples
//! recover the rotation; signs are fixed by forcing each recovered source's
//! skewness positive, since rectified Gaussians are positively skewed.

use crate::error::{Error, Result};
use crate::numerics::{gaussian_matrix, Matrix};
use crate::rng::SeedStream;

const MAX_RESTARTS: usize = 12;
const MAX_ITERS: usize = 400;

/// Sketch `a` down to k rows and estimate the mixing matrix `T U pi D`
/// (positive diagonal `D`). Returns `(sketch, mixing_estimate)`.
pub fn init_ica(a: &Matrix, k: usize, stream: &mut SeedStream) -> Result<(Matrix, Matrix)> {
    let m = a.rows();
    let n = a.cols();
    assert!(n > 10 * k, "too few samples for ICA");
    let t = gaussian_matrix(k, m, 0.0, 1.0, &mut stream.substream(1));
    let y = t.matmul(a); // k x n samples

    // center rows: rectified sources are not mean-zero
    let mut centered = y.clone();
    let mut means = vec![0.0; k];
    for (r, mean) in means.iter_mut().enumerate() {
        *mean = y.row(r).iter().sum::<f64>() / n as f64;
        for v in centered.row_mut(r) {
            *v -= *mean;
        }
    }

    // whiten: Z = C^{-1/2} Yc
    let cov = crate::model::estimate_covariance(&centered);
    let whiten = symmetric_inv_sqrt(&cov)?;
    let z = whiten.matmul(&centered);

    // deflationary fixed point with the quartic contrast:
    // w <- E[(w^T z)^3 z] - 3w
    let mut rotation = Matrix::zeros(k, k);
    let mut rs = stream.substream(2);
    for comp in 0..k {
        let mut accepted: Option<Vec<f64>> = None;
        for _ in 0..MAX_RESTARTS {
            let mut w = rs.next_unit_vector(k);
            orthogonalize(&mut w, &rotation, comp);
            normalize(&mut w);
            let mut converged = false;
            for _ in 0..MAX_ITERS {
                let mut next = vec![0.0; k];
                for c in 0..n {
                    let mut dot = 0.0;
                    for r in 0..k {
                        dot += w[r] * z[(r, c)];
                    }
                    let cube = dot * dot * dot;
                    for (r, nv) in next.iter_mut().enumerate() {
                        *nv += cube * z[(r, c)];
                    }
                }
                for (nv, wv) in next.iter_mut().zip(&w) {
                    *nv = *nv / n as f64 - 3.0 * wv;
                }
                orthogonalize(&mut next, &rotation, comp);
                let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm < 1e-12 {
                    break;
                }
                for v in next.iter_mut() {
                    *v /= norm;
                }
                let agreement: f64 = next.iter().zip(&w).map(|(a, b)| a * b).sum();
                w = next;
                if agreement.abs() > 1.0 - 1e-12 {
                    converged = true;
                    break;
                }
            }
            if converged {
                accepted = Some(w);
                break;
            }
        }
        let w = accepted.ok_or(Error::NoConvergence)?;
        rotation.row_mut(comp).copy_from_slice(&w);
    }

    // fix signs: each source s_j = rotation_j . z must be positively skewed
    for r in 0..k {
        let mut skew = 0.0;
        for c in 0..n {
            let mut dot = 0.0;
            for q in 0..k {
                dot += rotation[(r, q)] * z[(q, c)];
            }
            skew += dot * dot * dot;
        }
        if skew < 0.0 {
            for v in rotation.row_mut(r) {
                *v = -*v;
            }
        }
    }

    // mixing = C^{1/2} R^T
    let sqrt_cov = crate::model::matrix_sqrt_psd(&cov)?;
    let mixing = sqrt_cov.matmul(&rotation.transpose());
    Ok((t, mixing))
}

fn symmetric_inv_sqrt(c: &Matrix) -> Result<Matrix> {
    let sym = c.to_na().symmetric_eigen();
    let n = c.rows();
    let top = sym.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    let mut out = Matrix::zeros(n, n);
    for t in 0..n {
        let ev = sym.eigenvalues[t];
        if ev <= 1e-12 * top.max(1.0) {
            return Err(Error::NumericalFailure(
                "sample covariance is singular; cannot whiten".into(),
            ));
        }
        let s = 1.0 / ev.sqrt();
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += s * sym.eigenvectors[(i, t)] * sym.eigenvectors[(j, t)];
            }
        }
    }
    Ok(out)
}

fn orthogonalize(w: &mut [f64], rotation: &Matrix, count: usize) {
    for r in 0..count {
        let dot: f64 = w.iter().zip(rotation.row(r)).map(|(a, b)| a * b).sum();
        for (wv, rv) in w.iter_mut().zip(rotation.row(r)) {
            *wv -= dot * rv;
        }
    }
}

fn normalize(w: &mut [f64]) {
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in w.iter_mut() {
            *v /= norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance, generate_weights, Activation, NoiseModel, UMode};

    #[test]
    fn identity_u_recovers_sketch_columns() {
        // m = k, U* = I, V* orthonormal: mixing ~ T pi D with positive D
        let k = 2;
        let mut s = SeedStream::new(400);
        let (mut w, _) = generate_weights(k, k, 6, 1.0, UMode::Orthonormal, &mut s).unwrap();
        w.u = Matrix::identity(k);
        let inst = generate_instance(
            &w,
            &Activation::Relu,
            200_000,
            &NoiseModel::None,
            &s,
            None,
        )
        .unwrap();
        let mut is = s.substream(5);
        let (t, mixing) = init_ica(&inst.a, k, &mut is).unwrap();

        // match mixing columns to sketch columns by max correlation
        let mut used = [false; 2];
        let mut total_err = 0.0;
        for j in 0..k {
            let col = mixing.col(j);
            let mut best = (0usize, -1.0f64, 0.0f64);
            for c in 0..k {
                if used[c] {
                    continue;
                }
                let tc = t.col(c);
                let dot: f64 = col.iter().zip(&tc).map(|(a, b)| a * b).sum();
                let nc: f64 = tc.iter().map(|v| v * v).sum::<f64>().sqrt();
                let nj: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
                let cos = dot / (nc * nj);
                if cos > best.1 {
                    best = (c, cos, dot / (nc * nc));
                }
            }
            let (c, cos, scale) = best;
            used[c] = true;
            assert!(cos > 0.99, "column {j}: cosine {cos}");
            assert!(scale > 0.0, "column {j}: negative scale {scale}");
            let tc = t.col(c);
            for (a, b) in col.iter().zip(&tc) {
                let dv = a - scale * b;
                total_err += dv * dv;
            }
        }
        let rel = total_err.sqrt() / t.frob_norm();
        assert!(rel <= 0.05, "relative mixing error {rel}");
    }

    #[test]
    fn deterministic_under_fixed_stream() {
        let k = 2;
        let mut s = SeedStream::new(401);
        let (w, _) = generate_weights(4, k, 5, 1.0, UMode::Orthonormal, &mut s).unwrap();
        let inst =
            generate_instance(&w, &Activation::Relu, 30_000, &NoiseModel::None, &s, None).unwrap();
        let mut s1 = s.substream(9);
        let mut s2 = s.substream(9);
        let (t1, m1) = init_ica(&inst.a, k, &mut s1).unwrap();
        let (t2, m2) = init_ica(&inst.a, k, &mut s2).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(m1, m2);
    }

    #[test]
    fn recovered_sources_positively_skewed() {
        let k = 2;
        let mut s = SeedStream::new(402);
        let (w, _) = generate_weights(5, k, 6, 1.0, UMode::Orthonormal, &mut s).unwrap();
        let inst =
            generate_instance(&w, &Activation::Relu, 50_000, &NoiseModel::None, &s, None).unwrap();
        let mut is = s.substream(3);
        let (t, mixing) = init_ica(&inst.a, k, &mut is).unwrap();
        // reconstruct sources via the mixing inverse and verify skewness
        let y = t.matmul(&inst.a);
        let inv = crate::numerics::pinv(&mixing, 1e-12);
        let sources = inv.matmul(&y);
        for r in 0..k {
            let n = sources.cols() as f64;
            let mean = sources.row(r).iter().sum::<f64>() / n;
            let skew: f64 = sources
                .row(r)
                .iter()
                .map(|v| {
                    let c = v - mean;
                    c * c * c
                })
                .sum::<f64>()
                / n;
            assert!(skew > 0.0, "source {r} skew {skew}");
        }
    }
}
