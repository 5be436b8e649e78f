//! LP feasibility via two-phase simplex on dense tableaus.
//!
//! Only feasibility is needed: phase 1 minimizes the artificial-variable sum
//! and either certifies infeasibility or hands back a feasible point. Bland's
//! rule everywhere, so the solver cannot cycle; a generous pivot budget
//! guards against numerical stalls anyway.

use crate::error::{Error, Result};
use crate::EQ_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Feasibility problem over free (sign-unrestricted) variables.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            constraints: Vec::new(),
        }
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars, "coefficient length mismatch");
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    /// Largest violation of any constraint at `x` (0 when feasible), scaled
    /// by each row's coefficient magnitude.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            let scale = c
                .coeffs
                .iter()
                .fold(c.rhs.abs(), |m, v| m.max(v.abs()))
                .max(1.0);
            let v = match c.relation {
                Relation::Ge => (c.rhs - lhs) / scale,
                Relation::Le => (lhs - c.rhs) / scale,
                Relation::Eq => (lhs - c.rhs).abs() / scale,
            };
            worst = worst.max(v);
        }
        worst
    }
}

const PIVOT_TOL: f64 = 1e-10;

/// Returns a point satisfying every constraint within `EQ_TOL` (relative to
/// row scale), or `None` if the program is infeasible.
pub fn lp_feasible(lp: &LinearProgram) -> Result<Option<Vec<f64>>> {
    let n = lp.num_vars;
    let m = lp.constraints.len();
    if m == 0 {
        return Ok(Some(vec![0.0; n]));
    }

    // Standard-form embedding: x = p - q with p, q >= 0, then slack /
    // artificial columns per row. Row scaling keeps the tableau near unit
    // magnitude.
    let mut num_slack = 0;
    let mut num_art = 0;
    for c in &lp.constraints {
        match c.relation {
            Relation::Le | Relation::Ge => {
                num_slack += 1;
                num_art += 1;
            }
            Relation::Eq => num_art += 1,
        }
    }
    let total = 2 * n + num_slack + num_art;
    let art_start = 2 * n + num_slack;
    let mut tab = vec![vec![0.0f64; total + 1]; m];
    let mut basis = vec![0usize; m];

    let mut slack_idx = 2 * n;
    let mut art_idx = art_start;
    for (i, c) in lp.constraints.iter().enumerate() {
        let scale = c
            .coeffs
            .iter()
            .fold(c.rhs.abs(), |mx, v| mx.max(v.abs()))
            .max(1.0);
        let mut coeffs: Vec<f64> = c.coeffs.iter().map(|v| v / scale).collect();
        let mut rhs = c.rhs / scale;
        let mut rel = c.relation;
        if rhs < 0.0 {
            for v in coeffs.iter_mut() {
                *v = -*v;
            }
            rhs = -rhs;
            rel = match rel {
                Relation::Ge => Relation::Le,
                Relation::Le => Relation::Ge,
                Relation::Eq => Relation::Eq,
            };
        }
        for (j, v) in coeffs.iter().enumerate() {
            tab[i][j] = *v;
            tab[i][n + j] = -*v;
        }
        tab[i][total] = rhs;
        match rel {
            Relation::Le => {
                tab[i][slack_idx] = 1.0;
                // slack can start basic; artificial column stays unused
                basis[i] = slack_idx;
                slack_idx += 1;
                art_idx += 1;
            }
            Relation::Ge => {
                tab[i][slack_idx] = -1.0;
                tab[i][art_idx] = 1.0;
                basis[i] = art_idx;
                slack_idx += 1;
                art_idx += 1;
            }
            Relation::Eq => {
                tab[i][art_idx] = 1.0;
                basis[i] = art_idx;
                art_idx += 1;
            }
        }
    }

    // Phase-1 reduced costs, rebuilt from the basis every iteration: the
    // pivot-update recurrence accumulates drift on long runs, and a stale
    // row misclassifies optimality near the tolerance.
    let reduced_costs = |tab: &Vec<Vec<f64>>, basis: &Vec<usize>| -> Vec<f64> {
        let mut obj = vec![0.0f64; total + 1];
        for j in art_start..total {
            obj[j] = 1.0;
        }
        for i in 0..m {
            if basis[i] >= art_start {
                for j in 0..=total {
                    obj[j] -= tab[i][j];
                }
            }
        }
        obj
    };

    let max_pivots = 200 * (m + total + 10);
    let mut pivots = 0usize;
    loop {
        let obj = reduced_costs(&tab, &basis);
        // Bland: smallest-index improving column that admits a pivot.
        // Columns with no positive entry are skipped (a sub-tolerance
        // column, not a real unbounded ray: phase 1 is bounded below).
        let mut chosen: Option<(usize, usize)> = None;
        for (j, &oj) in obj.iter().enumerate().take(total) {
            if oj >= -1e-9 {
                continue;
            }
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in tab.iter().enumerate() {
                let a = row[j];
                if a > PIVOT_TOL {
                    let ratio = row[total] / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - PIVOT_TOL
                                || ((ratio - lr).abs() <= PIVOT_TOL && basis[i] < basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            if let Some((r, _)) = leave {
                chosen = Some((j, r));
                break;
            }
        }
        let Some((e, r)) = chosen else { break };

        // Pivot on (r, e).
        let piv = tab[r][e];
        for v in tab[r].iter_mut() {
            *v /= piv;
        }
        for i in 0..m {
            if i != r {
                let f = tab[i][e];
                if f != 0.0 {
                    for j in 0..=total {
                        tab[i][j] -= f * tab[r][j];
                    }
                }
            }
        }
        basis[r] = e;

        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::NumericalFailure(format!(
                "simplex cycling guard exceeded after {pivots} pivots"
            )));
        }
    }

    // Phase-1 optimum = sum of artificial basics.
    let infeas: f64 = (0..m)
        .filter(|&i| basis[i] >= art_start)
        .map(|i| tab[i][total])
        .sum();
    if infeas > 1e-7 {
        return Ok(None);
    }

    let mut x = vec![0.0f64; n];
    for i in 0..m {
        let b = basis[i];
        let val = tab[i][total];
        if b < n {
            x[b] += val;
        } else if b < 2 * n {
            x[b - n] -= val;
        }
    }

    if lp.max_violation(&x) > EQ_TOL {
        return Err(Error::NumericalFailure(format!(
            "simplex returned a point violating constraints by {:.3e}",
            lp.max_violation(&x)
        )));
    }
    Ok(Some(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infeasible_interval() {
        let mut lp = LinearProgram::new(1);
        lp.add(vec![1.0], Relation::Ge, 1.0);
        lp.add(vec![1.0], Relation::Le, 0.0);
        assert!(lp_feasible(&lp).unwrap().is_none());
    }

    #[test]
    fn one_sided() {
        let mut lp = LinearProgram::new(1);
        lp.add(vec![1.0], Relation::Ge, 1.0);
        let x = lp_feasible(&lp).unwrap().unwrap();
        assert!(x[0] >= 1.0 - 1e-9);
    }

    #[test]
    fn hand_solved_pair() {
        // x + y >= 1, x - y = 0 has the solution ray x = y >= 0.5
        let mut lp = LinearProgram::new(2);
        lp.add(vec![1.0, 1.0], Relation::Ge, 1.0);
        lp.add(vec![1.0, -1.0], Relation::Eq, 0.0);
        let x = lp_feasible(&lp).unwrap().unwrap();
        assert!((x[0] - x[1]).abs() < 1e-9);
        assert!(x[0] >= 0.5 - 1e-9);
    }

    #[test]
    fn negative_solution_reachable() {
        // free variables must reach negative values
        let mut lp = LinearProgram::new(2);
        lp.add(vec![1.0, 0.0], Relation::Le, -3.0);
        lp.add(vec![1.0, 1.0], Relation::Eq, -1.0);
        let x = lp_feasible(&lp).unwrap().unwrap();
        assert!(x[0] <= -3.0 + 1e-9);
        assert!((x[0] + x[1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn equality_chain() {
        let mut lp = LinearProgram::new(3);
        lp.add(vec![1.0, 1.0, 1.0], Relation::Eq, 6.0);
        lp.add(vec![1.0, -1.0, 0.0], Relation::Eq, 0.0);
        lp.add(vec![0.0, 1.0, -1.0], Relation::Eq, 0.0);
        let x = lp_feasible(&lp).unwrap().unwrap();
        for v in &x {
            assert!((v - 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn returned_points_satisfy_all_constraints() {
        // randomized feasible programs around a planted point
        let stream = crate::rng::SeedStream::new(1234);
        for t in 0..50 {
            let mut s = stream.substream(t);
            let nv = 1 + s.next_index(4);
            let planted: Vec<f64> = (0..nv).map(|_| 4.0 * s.next_f64() - 2.0).collect();
            let mut lp = LinearProgram::new(nv);
            for _ in 0..(1 + s.next_index(6)) {
                let coeffs: Vec<f64> = (0..nv).map(|_| 2.0 * s.next_f64() - 1.0).collect();
                let lhs: f64 = coeffs.iter().zip(&planted).map(|(a, b)| a * b).sum();
                match s.next_index(3) {
                    0 => lp.add(coeffs, Relation::Ge, lhs - s.next_f64()),
                    1 => lp.add(coeffs, Relation::Le, lhs + s.next_f64()),
                    _ => lp.add(coeffs, Relation::Eq, lhs),
                }
            }
            let x = lp_feasible(&lp)
                .unwrap()
                .expect("planted-feasible LP reported infeasible");
            assert!(lp.max_violation(&x) <= crate::EQ_TOL, "violation at trial {t}");
        }
    }
}
