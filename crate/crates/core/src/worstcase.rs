//! Exact recovery for arbitrary inputs when rank(A) = k.
//!
//! The pipeline: pick k independent rows of `A` as a row basis `V'`,
//! enumerate the sign patterns realizable in its row space, then greedily
//! collect k vectors `y` via the iterative feasibility LP — each `y` lies in
//! the row span of `X`, its rectification lies in the row span of `A`, and
//! the rectifications are linearly independent. Two linear solves then give
//! `U` and `V`. ReLU only: for fixed (worst-case) inputs the nonlinearity of
//! `phi` cannot be removed by fixing a sign pattern.

use crate::error::{Error, Result};
use crate::model::{normalize_rows_absorbing, Activation, NetworkWeights};
use crate::numerics::{
    lp_feasible, projector, rank, solve_exact, LinearProgram, Matrix, Relation,
};
use crate::signpat::{enumerate_subspace_patterns, SignPattern};
use crate::RANK_TOL;

/// Accepted vectors so far, plus the projector complement used by the
/// linear-independence constraint.
#[derive(Debug, Clone)]
pub struct IterativeState {
    accepted: Vec<Vec<f64>>,
    /// I - P where P projects onto span{f(y^1) .. f(y^{i-1})}.
    complement: Matrix,
    n: usize,
}

impl IterativeState {
    pub fn new(n: usize) -> Self {
        IterativeState {
            accepted: Vec::new(),
            complement: Matrix::identity(n),
            n,
        }
    }

    pub fn accepted(&self) -> &[Vec<f64>] {
        &self.accepted
    }

    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    /// Pushes `y`, rebuilding the projector complement from the rectified
    /// accepted set.
    pub fn push(&mut self, y: Vec<f64>) {
        assert_eq!(y.len(), self.n);
        self.accepted.push(y);
        let rect = Matrix::from_rows(
            &self
                .accepted
                .iter()
                .map(|y| y.iter().map(|&v| v.max(0.0)).collect::<Vec<f64>>())
                .collect::<Vec<_>>(),
        );
        self.complement = Matrix::identity(self.n).sub(&projector(&rect));
    }
}

/// One round of the iterative LP: find `y` with the given sign pattern such
/// that `y = wX`, `f_S(y) = zV'`, and `f_S(y)` is independent of the
/// accepted rectifications. The nonlinear "independent" constraint runs as
/// 2n linearized variants (per coordinate, `>= 1` then `<= -1`); the first
/// feasible variant wins. Returns `None` when every variant is infeasible.
pub fn iterative_lp(
    x: &Matrix,
    v_basis: &Matrix,
    s: &SignPattern,
    state: &IterativeState,
) -> Result<Option<Vec<f64>>> {
    let n = x.cols();
    let d = x.rows();
    let k = v_basis.rows();
    assert_eq!(v_basis.cols(), n);
    assert_eq!(s.len(), n);

    // variables: w in R^d, z in R^k
    let nv = d + k;
    let mut base = LinearProgram::new(nv);
    for j in 0..n {
        // (wX)_j as coefficients over the w block
        let mut row = vec![0.0; nv];
        for p in 0..d {
            row[p] = x[(p, j)];
        }
        if s.contains(j) {
            base.add(row.clone(), Relation::Ge, 1.0);
            // link: (wX)_j - (zV')_j = 0 on the pattern
            for q in 0..k {
                row[d + q] = -v_basis[(q, j)];
            }
            base.add(row, Relation::Eq, 0.0);
        } else {
            base.add(row, Relation::Le, 0.0);
            // off the pattern f_S zeroes the coordinate: (zV')_j = 0
            let mut zrow = vec![0.0; nv];
            for q in 0..k {
                zrow[d + q] = v_basis[(q, j)];
            }
            base.add(zrow, Relation::Eq, 0.0);
        }
    }

    let extract = |sol: &[f64]| -> Vec<f64> {
        let w = &sol[..d];
        x.left_mul_vec(w)
    };

    if state.is_empty() {
        // no independence constraint yet
        return Ok(lp_feasible(&base)?.map(|sol| extract(&sol)));
    }

    // Base feasibility screens out most patterns before trying the 2n
    // linearized variants.
    if lp_feasible(&base)?.is_none() {
        return Ok(None);
    }

    // f_S(y) = zV' on every coordinate, so the independence constraint
    // [f_S(y)(I - P)]_t is linear in z with coefficients (V'(I - P))_{., t}.
    let vc = v_basis.matmul(&state.complement);
    for t in 0..n {
        for sign in [1.0, -1.0] {
            let mut lp = base.clone();
            let mut row = vec![0.0; nv];
            for q in 0..k {
                row[d + q] = vc[(q, t)];
            }
            if sign > 0.0 {
                lp.add(row, Relation::Ge, 1.0);
            } else {
                lp.add(row, Relation::Le, -1.0);
            }
            if let Some(sol) = lp_feasible(&lp)? {
                return Ok(Some(extract(&sol)));
            }
        }
    }
    Ok(None)
}

/// Greedy selection of k nearly-orthogonal rows of `a` (row-pivoted
/// Gram-Schmidt); errors out when fewer than k independent rows exist.
fn pick_row_basis(a: &Matrix, k: usize) -> Result<Matrix> {
    let mut residuals: Vec<Vec<f64>> = (0..a.rows()).map(|i| a.row(i).to_vec()).collect();
    let mut chosen: Vec<usize> = Vec::new();
    let scale = a.frob_norm().max(1.0);
    for _ in 0..k {
        let (best, norm) = residuals
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.iter().map(|v| v * v).sum::<f64>().sqrt()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if norm <= RANK_TOL * scale {
            return Err(Error::RankDeficientA {
                rank: chosen.len(),
                k,
            });
        }
        chosen.push(best);
        let dir: Vec<f64> = residuals[best].iter().map(|v| v / norm).collect();
        for r in residuals.iter_mut() {
            let proj: f64 = r.iter().zip(&dir).map(|(a, b)| a * b).sum();
            for (rv, dv) in r.iter_mut().zip(&dir) {
                *rv -= proj * dv;
            }
        }
    }
    chosen.sort_unstable();
    Ok(a.select_rows(&chosen))
}

/// Exact recovery of `(U, V)` from `A = U f(V X)` with rank(A) = k.
///
/// Returns weights reproducing `A` within `1e-6 ||A||_F`; refuses inputs
/// whose rank differs from `k` (below k is the hardness regime, above k is
/// unrealizable).
pub fn exact_neural_net(a: &Matrix, x: &Matrix, k: usize) -> Result<NetworkWeights> {
    assert_eq!(a.cols(), x.cols(), "A and X must share columns");
    let r = rank(a, RANK_TOL);
    if r < k {
        return Err(Error::RankDeficientA { rank: r, k });
    }
    if r > k {
        return Err(Error::NoRealization);
    }

    let v_basis = pick_row_basis(a, k)?;
    let patterns = enumerate_subspace_patterns(&v_basis)?;
    if patterns.len() > 1_000_000 {
        return Err(Error::BudgetExceeded(format!(
            "{} sign patterns exceed the search budget",
            patterns.len()
        )));
    }

    let tol = 1e-6 * a.frob_norm().max(1.0);
    let mut state = IterativeState::new(a.cols());
    // cursor per level so the last level can resume scanning when the final
    // factorization check rejects a candidate set
    let mut cursor = 0usize;
    while state.len() < k {
        let mut advanced = false;
        while cursor < patterns.len() {
            let s = &patterns[cursor];
            cursor += 1;
            if s.is_empty() {
                continue;
            }
            if let Some(y) = iterative_lp(x, &v_basis, s, &state)? {
                state.push(y);
                advanced = true;
                if state.len() < k {
                    cursor = 0;
                }
                break;
            }
        }
        if !advanced {
            return Err(Error::NoRealization);
        }
        if state.len() == k {
            // assemble and verify; on failure resume scanning for another
            // final vector
            let y_mat = Matrix::from_rows(state.accepted());
            let fy = y_mat.map(|v| v.max(0.0));
            let (ut, _) = solve_exact(&fy.transpose(), &a.transpose());
            let (vt, _) = solve_exact(&x.transpose(), &y_mat.transpose());
            let u = ut.transpose();
            let v = vt.transpose();
            let weights = normalize_rows_absorbing(&u, &v, &Activation::Relu)?;
            let rebuilt = weights.forward(&Activation::Relu, x);
            if rebuilt.sub(a).frob_norm() <= tol {
                return Ok(weights);
            }
            // reject the last accepted vector and keep scanning
            let mut rolled = IterativeState::new(a.cols());
            for y in state.accepted()[..k - 1].iter() {
                rolled.push(y.clone());
            }
            state = rolled;
            if cursor >= patterns.len() {
                return Err(Error::NoRealization);
            }
        }
    }
    unreachable!("loop exits via return");
}
