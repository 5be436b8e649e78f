//! Permutation/positive-scaling-invariant error metrics and the
//! condition-number lower-bound probe.

use crate::error::{Error, Result};
use crate::model::{apply_activation, Activation, NetworkWeights};
use crate::numerics::Matrix;
use crate::rng::SeedStream;

/// Outcome of matching recovered weights against the truth.
#[derive(Debug, Clone)]
pub struct MatchResult {
    /// `permutation[i]` is the recovered row matched to truth row `i`.
    pub permutation: Vec<usize>,
    /// Per-row signs (+1/-1) when sign-aware matching is on; all +1 otherwise.
    pub signs: Vec<f64>,
    pub row_errors: Vec<f64>,
    pub u_error: f64,
    pub v_error: f64,
    pub functional_error: f64,
    pub functional_rel: f64,
}

/// Minimum-cost assignment on a square cost matrix (Hungarian/JV style),
/// used for matching beyond brute-force size. Returns `assign[row] = col`.
pub fn hungarian(cost: &Matrix) -> Vec<usize> {
    let n = cost.rows();
    assert_eq!(n, cost.cols(), "square cost matrix required");
    // potentials and matching over a virtual 1-based column array
    let mut ys = vec![0.0f64; n + 1];
    let mut yt = vec![0.0f64; n + 1];
    let mut job = vec![usize::MAX; n + 1]; // job[col] = row
    for row in 0..n {
        let mut w_cur = n; // virtual column
        job[w_cur] = row;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut prv = vec![usize::MAX; n + 1];
        let mut in_z = vec![false; n + 1];
        while job[w_cur] != usize::MAX {
            in_z[w_cur] = true;
            let j = job[w_cur];
            let mut delta = f64::INFINITY;
            let mut w_next = 0;
            for w in 0..n {
                if !in_z[w] {
                    let diff = cost[(j, w)] - ys[j + 1] - yt[w];
                    if diff < min_to[w] {
                        min_to[w] = diff;
                        prv[w] = w_cur;
                    }
                    if min_to[w] < delta {
                        delta = min_to[w];
                        w_next = w;
                    }
                }
            }
            for w in 0..=n {
                if in_z[w] {
                    if job[w] != usize::MAX {
                        ys[job[w] + 1] += delta;
                    }
                    yt[w] -= delta;
                } else {
                    min_to[w] -= delta;
                }
            }
            w_cur = w_next;
        }
        // augment along the alternating path
        while w_cur != n {
            let w_prev = prv[w_cur];
            job[w_cur] = job[w_prev];
            w_cur = w_prev;
        }
    }
    let mut assign = vec![usize::MAX; n];
    for w in 0..n {
        if job[w] != usize::MAX {
            assign[job[w]] = w;
        }
    }
    assign
}

fn row_distance(a: &[f64], b: &[f64], sign: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = sign * x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Matches rows of `got.v` to rows of `truth.v`, minimizing the summed row
/// distance: brute force over permutations for k <= 8, Hungarian beyond.
/// Positive scaling is resolved by the unit-row-norm convention; with
/// `sign_aware` each row may also flip sign (for grading initializers whose
/// rows carry unknown signs).
pub fn match_weights(
    got: &NetworkWeights,
    truth: &NetworkWeights,
    f: &Activation,
    sign_aware: bool,
) -> Result<MatchResult> {
    let k = truth.k();
    if got.k() != k
        || got.v.cols() != truth.v.cols()
        || got.u.rows() != truth.u.rows()
        || got.u.cols() != truth.u.cols()
    {
        return Err(Error::ShapeMismatch(format!(
            "got ({}x{}, {}x{}) vs truth ({}x{}, {}x{})",
            got.u.rows(),
            got.u.cols(),
            got.v.rows(),
            got.v.cols(),
            truth.u.rows(),
            truth.u.cols(),
            truth.v.rows(),
            truth.v.cols()
        )));
    }

    // cost[i][j] = best distance from truth row i to candidate row j
    let mut cost = Matrix::zeros(k, k);
    let mut best_sign = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let plus = row_distance(got.v.row(j), truth.v.row(i), 1.0);
            if sign_aware {
                let minus = row_distance(got.v.row(j), truth.v.row(i), -1.0);
                if minus < plus {
                    cost[(i, j)] = minus;
                    best_sign[(i, j)] = -1.0;
                    continue;
                }
            }
            cost[(i, j)] = plus;
            best_sign[(i, j)] = 1.0;
        }
    }

    let assign = if k <= 8 {
        // exhaustive minimum over permutations
        let mut perm: Vec<usize> = (0..k).collect();
        let mut best_perm = perm.clone();
        let mut best_cost = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let c: f64 = (0..k).map(|i| cost[(i, p[i])]).sum();
            if c < best_cost {
                best_cost = c;
                best_perm = p.to_vec();
            }
        });
        best_perm
    } else {
        hungarian(&cost)
    };

    let signs: Vec<f64> = (0..k).map(|i| best_sign[(i, assign[i])]).collect();
    let row_errors: Vec<f64> = (0..k).map(|i| cost[(i, assign[i])]).collect();
    let v_error = row_errors.iter().map(|e| e * e).sum::<f64>().sqrt();

    // permute (and sign-flip) U columns consistently
    let mut u_err_sq = 0.0;
    for i in 0..k {
        for r in 0..truth.u.rows() {
            let d = signs[i] * got.u[(r, assign[i])] - truth.u[(r, i)];
            u_err_sq += d * d;
        }
    }
    let u_error = u_err_sq.sqrt();

    // functional error on a deterministic probe input
    let d = truth.v.cols();
    let mut probe_stream = SeedStream::new(0x9a7c_11);
    let probe = crate::numerics::gaussian_matrix(d, 256, 0.0, 1.0, &mut probe_stream);
    let a_truth = truth.forward(f, &probe);
    let a_got = got.forward(f, &probe);
    let functional_error = a_got.sub(&a_truth).frob_norm();
    let functional_rel = if a_truth.frob_norm() > 0.0 {
        functional_error / a_truth.frob_norm()
    } else {
        functional_error
    };

    Ok(MatchResult {
        permutation: assign,
        signs,
        row_errors,
        u_error,
        v_error,
        functional_error,
        functional_rel,
    })
}

fn permute(perm: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == perm.len() {
        visit(perm);
        return;
    }
    for i in at..perm.len() {
        perm.swap(at, i);
        permute(perm, at + 1, visit);
        perm.swap(at, i);
    }
}

/// `||A - U f(V X)||_F` and its ratio to `||A||_F`.
pub fn functional_error(
    a: &Matrix,
    w: &NetworkWeights,
    x: &Matrix,
    f: &Activation,
) -> (f64, f64) {
    let pred = w.forward(f, x);
    let abs = pred.sub(a).frob_norm();
    let denom = a.frob_norm();
    (abs, if denom > 0.0 { abs / denom } else { abs })
}

/// Builds the two-instance pair whose outputs collide off a Theta(a)-mass
/// region, and reports the fraction of sample columns where they differ.
/// The first network has condition number 1/a.
pub fn kappa_probe(a_param: f64, n: usize, stream: &mut SeedStream) -> f64 {
    assert!(a_param > 0.0 && a_param <= 1.0);
    let nets: Vec<(Matrix, Matrix)> = (1..=2)
        .map(|i| {
            let ai = i as f64 * a_param;
            let z = (1.0 + ai * ai).sqrt();
            let u = Matrix::row_vector(&[z / 2.0, z / 2.0]);
            let v = Matrix::from_rows(&[vec![1.0 / z, ai / z], vec![1.0 / z, -ai / z]]);
            (u, v)
        })
        .collect();
    let x = crate::numerics::gaussian_matrix(2, n, 0.0, 1.0, stream);
    let f = Activation::Relu;
    let out: Vec<Matrix> = nets
        .iter()
        .map(|(u, v)| u.matmul(&apply_activation(&f, &v.matmul(&x))))
        .collect();
    let mut differing = 0usize;
    for j in 0..n {
        if (out[0][(0, j)] - out[1][(0, j)]).abs() > 1e-12 {
            differing += 1;
        }
    }
    differing as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_weights, UMode};
    use crate::numerics::gaussian_matrix;

    fn weights(seed: u64, m: usize, k: usize, d: usize) -> NetworkWeights {
        let mut s = SeedStream::new(seed);
        generate_weights(m, k, d, 1.5, UMode::FullRank, &mut s).unwrap().0
    }

    #[test]
    fn exact_match_zero_errors() {
        let w = weights(1, 3, 2, 4);
        let r = match_weights(&w, &w, &Activation::Relu, false).unwrap();
        assert!(r.v_error < 1e-12 && r.u_error < 1e-12 && r.functional_error < 1e-12);
    }

    #[test]
    fn swapped_rows_still_zero() {
        let w = weights(2, 3, 2, 4);
        let swapped = NetworkWeights {
            u: w.u.select_cols(&[1, 0]),
            v: w.v.select_rows(&[1, 0]),
        };
        let r = match_weights(&swapped, &w, &Activation::Relu, false).unwrap();
        assert!(r.v_error < 1e-12 && r.u_error < 1e-12);
        assert_eq!(r.permutation, vec![1, 0]);
    }

    #[test]
    fn perturbation_reported_accurately() {
        let w = weights(3, 3, 2, 4);
        let mut v = w.v.clone();
        let mut s = SeedStream::new(5);
        let bump = s.next_unit_vector(4);
        let eps = 1e-3;
        for (j, b) in bump.iter().enumerate() {
            v[(0, j)] += eps * b;
        }
        // renormalize the touched row so the convention holds
        let norm = v.row_norm(0);
        for x in v.row_mut(0) {
            *x /= norm;
        }
        let injected: f64 = (0..4)
            .map(|j| {
                let d = v[(0, j)] - w.v[(0, j)];
                d * d
            })
            .sum::<f64>()
            .sqrt();
        let got = NetworkWeights { u: w.u.clone(), v };
        let r = match_weights(&got, &w, &Activation::Relu, false).unwrap();
        assert!((r.v_error - injected).abs() <= 0.1 * injected);
    }

    #[test]
    fn match_invariant_under_any_permutation() {
        let w = weights(6, 4, 3, 5);
        let perms: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let base = match_weights(&w, &w, &Activation::Relu, false).unwrap();
        for p in perms {
            let shuffled = NetworkWeights {
                u: w.u.select_cols(&p),
                v: w.v.select_rows(&p),
            };
            let r = match_weights(&shuffled, &w, &Activation::Relu, false).unwrap();
            assert!((r.v_error - base.v_error).abs() < 1e-12);
            assert!((r.u_error - base.u_error).abs() < 1e-12);
        }
    }

    #[test]
    fn sign_aware_matching_recovers_flips() {
        let w = weights(7, 3, 3, 5);
        let mut v = w.v.clone();
        for x in v.row_mut(1) {
            *x = -*x;
        }
        let got = NetworkWeights { u: w.u.clone(), v };
        let r = match_weights(&got, &w, &Activation::Relu, true).unwrap();
        assert!(r.v_error < 1e-12);
        assert_eq!(r.signs, vec![1.0, -1.0, 1.0]);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let w1 = weights(8, 3, 2, 4);
        let w2 = weights(9, 3, 2, 5);
        assert!(matches!(
            match_weights(&w1, &w2, &Activation::Relu, false),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn hungarian_simple() {
        let cost = Matrix::from_rows(&[
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ]);
        let assign = hungarian(&cost);
        let total: f64 = (0..3).map(|i| cost[(i, assign[i])]).sum();
        assert!((total - 5.0).abs() < 1e-12, "assignment {assign:?}");
    }

    #[test]
    fn hungarian_agrees_with_brute_force() {
        let stream = SeedStream::new(77);
        for t in 0..20 {
            let mut s = stream.substream(t);
            let k = 2 + s.next_index(5);
            let cost = gaussian_matrix(k, k, 0.0, 1.0, &mut s).map(f64::abs);
            let assign = hungarian(&cost);
            let hung: f64 = (0..k).map(|i| cost[(i, assign[i])]).sum();
            let mut perm: Vec<usize> = (0..k).collect();
            let mut best = f64::INFINITY;
            permute(&mut perm, 0, &mut |p| {
                let c: f64 = (0..k).map(|i| cost[(i, p[i])]).sum();
                best = best.min(c);
            });
            assert!((hung - best).abs() < 1e-9, "trial {t}");
        }
    }

    #[test]
    fn functional_error_cases() {
        let w = weights(10, 3, 2, 4);
        let mut s = SeedStream::new(11);
        let x = gaussian_matrix(4, 200, 0.0, 1.0, &mut s);
        let a = w.forward(&Activation::Relu, &x);
        let (abs, rel) = functional_error(&a, &w, &x, &Activation::Relu);
        assert!(abs <= 1e-10 * a.frob_norm());
        assert!(rel <= 1e-10);

        let zero = NetworkWeights {
            u: Matrix::zeros(3, 2),
            v: w.v.clone(),
        };
        let (abs, rel) = functional_error(&a, &zero, &x, &Activation::Relu);
        assert!((abs - a.frob_norm()).abs() < 1e-12);
        assert!((rel - 1.0).abs() < 1e-12);

        let e = gaussian_matrix(3, 200, 0.0, 0.1, &mut s);
        let noisy = a.add(&e);
        let (abs, _) = functional_error(&noisy, &w, &x, &Activation::Relu);
        assert!((abs - e.frob_norm()).abs() < 1e-9);
    }

    #[test]
    fn kappa_probe_large_a_distinguishes() {
        let mut s = SeedStream::new(12);
        let frac = kappa_probe(1.0, 10_000, &mut s);
        assert!(frac > 0.1, "fraction {frac}");
    }

    #[test]
    fn kappa_probe_small_a_often_identical() {
        let mut identical = 0;
        for t in 0..100u64 {
            let mut s = SeedStream::new(40_000 + t);
            if kappa_probe(0.01, 10, &mut s) == 0.0 {
                identical += 1;
            }
        }
        assert!(identical >= 80, "identical in only {identical}/100");
    }

    #[test]
    fn kappa_probe_monotone_in_a() {
        let mut means = Vec::new();
        for &a in &[0.01, 0.1, 1.0] {
            let mut total = 0.0;
            for t in 0..50u64 {
                let mut s = SeedStream::new(50_000 + t);
                total += kappa_probe(a, 10_000, &mut s);
            }
            means.push(total / 50.0);
        }
        assert!(
            means[0] <= means[1] && means[1] <= means[2],
            "means {means:?}"
        );
    }
}
