//! Reduction chain: reversible 6-SAT -> rectified separability -> network
//! feasibility, with witness construction, verification, and a tiny-scale
//! brute-force solver for cross-checking.

use crate::error::{Error, Result};
use crate::numerics::{lp_feasible, LinearProgram, Matrix, Relation};

/// CNF with exactly six (possibly repeated) literals per clause. Literals
/// are nonzero integers: `+i` for variable i, `-i` for its negation
/// (1-based, DIMACS style).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf6 {
    pub num_vars: usize,
    pub clauses: Vec<[i32; 6]>,
}

impl Cnf6 {
    pub fn new(num_vars: usize, clauses: Vec<[i32; 6]>) -> Result<Self> {
        for c in &clauses {
            for &lit in c {
                if lit == 0 || lit.unsigned_abs() as usize > num_vars {
                    return Err(Error::Parse(format!("literal {lit} out of range")));
                }
            }
        }
        Ok(Cnf6 { num_vars, clauses })
    }

    /// Every literal negated in every clause.
    pub fn reversed(&self) -> Cnf6 {
        Cnf6 {
            num_vars: self.num_vars,
            clauses: self
                .clauses
                .iter()
                .map(|c| {
                    let mut r = *c;
                    for lit in r.iter_mut() {
                        *lit = -*lit;
                    }
                    r
                })
                .collect(),
        }
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        assert_eq!(assignment.len(), self.num_vars);
        self.clauses.iter().all(|c| {
            c.iter().any(|&lit| {
                let v = assignment[lit.unsigned_abs() as usize - 1];
                if lit > 0 {
                    v
                } else {
                    !v
                }
            })
        })
    }

    /// Exhaustive satisfiability check; only sensible for few variables.
    pub fn brute_force_sat(&self) -> Option<Vec<bool>> {
        assert!(self.num_vars <= 24, "brute force limited to 24 variables");
        for bits in 0u64..(1 << self.num_vars) {
            let assignment: Vec<bool> =
                (0..self.num_vars).map(|i| bits >> i & 1 == 1).collect();
            if self.eval(&assignment) {
                return Some(assignment);
            }
        }
        None
    }

    /// DIMACS-style text: clause lines of 6 signed integers, 0-terminated.
    pub fn parse_dimacs(text: &str) -> Result<Cnf6> {
        let mut num_vars = 0usize;
        let mut clauses = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('p') {
                if let Some(rest) = line.strip_prefix("p cnf") {
                    let mut it = rest.split_whitespace();
                    if let Some(v) = it.next().and_then(|s| s.parse::<usize>().ok()) {
                        num_vars = v;
                    }
                }
                continue;
            }
            let lits: Vec<i32> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<i32>()
                        .map_err(|_| Error::Parse(format!("bad literal {t:?}")))
                })
                .collect::<Result<_>>()?;
            if lits.last() != Some(&0) {
                return Err(Error::Parse("clause line must end with 0".into()));
            }
            let body = &lits[..lits.len() - 1];
            if body.len() != 6 {
                return Err(Error::Parse(format!(
                    "clause must have exactly 6 literals, got {}",
                    body.len()
                )));
            }
            for &l in body {
                num_vars = num_vars.max(l.unsigned_abs() as usize);
            }
            clauses.push([body[0], body[1], body[2], body[3], body[4], body[5]]);
        }
        Cnf6::new(num_vars, clauses)
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for lit in c {
                out.push_str(&lit.to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }
}

/// `psi AND reversed(psi)`: reversible by construction.
pub fn make_reversible(psi: &Cnf6) -> Cnf6 {
    let mut clauses = psi.clauses.clone();
    clauses.extend(psi.reversed().clauses);
    Cnf6 {
        num_vars: psi.num_vars,
        clauses,
    }
}

/// Separability instance: find x, y with `p^T x <= 0`, `p^T y <= 0` on P and
/// `f(q^T x) + f(q^T y) = 1` on Q.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluSepInstance {
    pub dim: usize,
    pub p_set: Vec<Vec<f64>>,
    pub q_set: Vec<Vec<f64>>,
}

/// Encodes a reversible formula: dim = n + 2; Q carries the +-e_i truth
/// gadgets plus the five vectors pinning coordinates n+1, n+2; each clause
/// contributes a P vector with -1/+1 per positive/negated literal and -10
/// at the two gadget coordinates.
pub fn reduce_sat_to_relusep(psi: &Cnf6) -> ReluSepInstance {
    let n = psi.num_vars;
    let dim = n + 2;
    let unit = |i: usize, scale: f64| {
        let mut v = vec![0.0; dim];
        v[i] = scale;
        v
    };
    let mut q_set = Vec::with_capacity(2 * n + 5);
    for i in 0..n {
        q_set.push(unit(i, 1.0));
        q_set.push(unit(i, -1.0));
    }
    q_set.push(unit(n, 1.0));
    q_set.push(unit(n + 1, 1.0));
    q_set.push(unit(n, -2.0));
    q_set.push(unit(n + 1, -2.0));
    let mut both = vec![0.0; dim];
    both[n] = 1.0;
    both[n + 1] = 1.0;
    q_set.push(both);

    let mut p_set = Vec::with_capacity(psi.clauses.len());
    for clause in &psi.clauses {
        let mut v = vec![0.0; dim];
        for &lit in clause {
            let idx = lit.unsigned_abs() as usize - 1;
            // positive literal contributes -1, negated +1 (the clause
            // inequality sum +-x_i >= -5 negated into p^T x <= 0 form)
            v[idx] += if lit > 0 { -1.0 } else { 1.0 };
        }
        v[n] = -10.0;
        v[n + 1] = -10.0;
        p_set.push(v);
    }
    ReluSepInstance { dim, p_set, q_set }
}

/// Witness from a truth assignment: `x_i = +-1` by truth value, `y = -x` on
/// the variable block, gadget coordinates fixed to the (1, -1/2) branch.
pub fn assignment_to_witness(assignment: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let n = assignment.len();
    let mut x = vec![0.0; n + 2];
    let mut y = vec![0.0; n + 2];
    for (i, &b) in assignment.iter().enumerate() {
        x[i] = if b { 1.0 } else { -1.0 };
        y[i] = -x[i];
    }
    x[n] = 1.0;
    x[n + 1] = -0.5;
    y[n] = -0.5;
    y[n + 1] = 1.0;
    (x, y)
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

/// Checks all P and Q constraints at (x, y); returns the verdict plus a
/// description of each violation.
pub fn verify_witness(
    inst: &ReluSepInstance,
    x: &[f64],
    y: &[f64],
    tol: f64,
) -> (bool, Vec<String>) {
    let mut violations = Vec::new();
    let dot = |v: &[f64], w: &[f64]| -> f64 { v.iter().zip(w).map(|(a, b)| a * b).sum() };
    for (i, p) in inst.p_set.iter().enumerate() {
        let px = dot(p, x);
        let py = dot(p, y);
        if px > tol {
            violations.push(format!("P[{i}]: p.x = {px:.3e} > 0"));
        }
        if py > tol {
            violations.push(format!("P[{i}]: p.y = {py:.3e} > 0"));
        }
    }
    for (i, q) in inst.q_set.iter().enumerate() {
        let s = relu(dot(q, x)) + relu(dot(q, y));
        if (s - 1.0).abs() > tol {
            violations.push(format!("Q[{i}]: f(q.x)+f(q.y) = {s:.6} != 1"));
        }
    }
    (violations.is_empty(), violations)
}

/// Casts separability as a k=2 network feasibility instance: columns of X
/// are the P then Q vectors, labels are 0 on P and 1 on Q, alpha = [1, 1].
/// A witness (x, y) solves `alpha f(V X) = A` with `V = [x, y]^T`.
pub fn reduce_relusep_to_network(inst: &ReluSepInstance) -> (Matrix, Matrix, Matrix) {
    let alpha = Matrix::row_vector(&[1.0, 1.0]);
    let cols = inst.p_set.len() + inst.q_set.len();
    let mut x = Matrix::zeros(inst.dim, cols);
    for (j, p) in inst.p_set.iter().enumerate() {
        x.set_col(j, p);
    }
    for (j, q) in inst.q_set.iter().enumerate() {
        x.set_col(inst.p_set.len() + j, q);
    }
    let mut a = Matrix::zeros(1, cols);
    for j in inst.p_set.len()..cols {
        a[(0, j)] = 1.0;
    }
    (alpha, x, a)
}

/// Branch-and-prune search for a separability witness at tiny scale: each
/// Q constraint branches on the signs of (q^T x, q^T y) — both nonpositive
/// is immediately contradictory — and every branch is checked by LP before
/// descending. The budget guard refuses instances whose worst-case
/// enumeration `2^(|P|+|Q|)` exceeds `budget`.
pub fn brute_force_relusep(
    inst: &ReluSepInstance,
    budget: u64,
) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    if inst.dim > 5 {
        return Err(Error::BudgetExceeded(format!(
            "dim {} exceeds the brute-force limit of 5",
            inst.dim
        )));
    }
    let work = inst.p_set.len() as u32 + inst.q_set.len() as u32;
    if work >= 63 || (1u64 << work) > budget {
        return Err(Error::BudgetExceeded(format!(
            "2^{work} sign combinations exceed budget {budget}"
        )));
    }

    // variables: x then y
    let nv = 2 * inst.dim;
    let mut base = LinearProgram::new(nv);
    for p in &inst.p_set {
        let mut row = vec![0.0; nv];
        row[..inst.dim].copy_from_slice(p);
        base.add(row, Relation::Le, 0.0);
        let mut row = vec![0.0; nv];
        row[inst.dim..].copy_from_slice(p);
        base.add(row, Relation::Le, 0.0);
    }

    fn descend(
        inst: &ReluSepInstance,
        qi: usize,
        lp: &LinearProgram,
    ) -> Result<Option<Vec<f64>>> {
        match lp_feasible(lp)? {
            None => return Ok(None),
            Some(sol) if qi == inst.q_set.len() => return Ok(Some(sol)),
            Some(_) => {}
        }
        let dim = inst.dim;
        let q = &inst.q_set[qi];
        let xrow = |scale: f64| {
            let mut row = vec![0.0; 2 * dim];
            for (t, &v) in q.iter().enumerate() {
                row[t] = scale * v;
            }
            row
        };
        let yrow = |scale: f64| {
            let mut row = vec![0.0; 2 * dim];
            for (t, &v) in q.iter().enumerate() {
                row[dim + t] = scale * v;
            }
            row
        };
        // branch 1: q.x > 0 active, q.y <= 0  =>  q.x = 1
        {
            let mut b = lp.clone();
            b.add(xrow(1.0), Relation::Eq, 1.0);
            b.add(yrow(1.0), Relation::Le, 0.0);
            if let Some(sol) = descend(inst, qi + 1, &b)? {
                return Ok(Some(sol));
            }
        }
        // branch 2: q.y > 0 active, q.x <= 0  =>  q.y = 1
        {
            let mut b = lp.clone();
            b.add(yrow(1.0), Relation::Eq, 1.0);
            b.add(xrow(1.0), Relation::Le, 0.0);
            if let Some(sol) = descend(inst, qi + 1, &b)? {
                return Ok(Some(sol));
            }
        }
        // branch 3: both active  =>  q.x + q.y = 1 with both >= 0
        {
            let mut b = lp.clone();
            let mut both = xrow(1.0);
            for (t, v) in yrow(1.0).into_iter().enumerate() {
                both[t] += v;
            }
            b.add(both, Relation::Eq, 1.0);
            b.add(xrow(1.0), Relation::Ge, 0.0);
            b.add(yrow(1.0), Relation::Ge, 0.0);
            if let Some(sol) = descend(inst, qi + 1, &b)? {
                return Ok(Some(sol));
            }
        }
        // both nonpositive gives f + f = 0 != 1: pruned
        Ok(None)
    }

    Ok(descend(inst, 0, &base)?.map(|sol| {
        let x = sol[..inst.dim].to_vec();
        let y = sol[inst.dim..].to_vec();
        (x, y)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clause(lits: [i32; 6]) -> [i32; 6] {
        lits
    }

    #[test]
    fn reversible_repeated_literal_unsat() {
        let psi = Cnf6::new(1, vec![clause([1, 1, 1, 1, 1, 1])]).unwrap();
        let rev = make_reversible(&psi);
        assert_eq!(rev.clauses.len(), 2);
        assert_eq!(rev.clauses[1], [-1, -1, -1, -1, -1, -1]);
        assert!(rev.brute_force_sat().is_none());
    }

    #[test]
    fn reversible_mixed_clause_sat() {
        let psi = Cnf6::new(6, vec![clause([1, 2, 3, -4, -5, -6])]).unwrap();
        let rev = make_reversible(&psi);
        let assignment = rev.brute_force_sat().expect("satisfiable");
        assert!(rev.eval(&assignment));
    }

    #[test]
    fn reversal_is_involution_up_to_clause_order() {
        let psi = Cnf6::new(3, vec![clause([1, -2, 3, 1, -2, 3])]).unwrap();
        let rev = make_reversible(&psi);
        let mut double = make_reversible(&rev.reversed());
        let mut original = make_reversible(&rev);
        double.clauses.sort_unstable();
        original.clauses.sort_unstable();
        assert_eq!(double, original);
    }

    #[test]
    fn reduction_counts() {
        let psi = Cnf6::new(1, vec![clause([1, 1, 1, 1, 1, 1])]).unwrap();
        let inst = reduce_sat_to_relusep(&psi);
        assert_eq!(inst.dim, 3);
        assert_eq!(inst.q_set.len(), 2 * 1 + 5);
        assert_eq!(inst.p_set.len(), 1);
    }

    #[test]
    fn clause_vector_matches_gadget() {
        let psi = Cnf6::new(6, vec![clause([1, -2, 3, 4, -5, 6])]).unwrap();
        let inst = reduce_sat_to_relusep(&psi);
        let want = vec![-1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -10.0, -10.0];
        assert_eq!(inst.p_set[0], want);
    }

    #[test]
    fn witness_construction_gadget_rows() {
        let (x, y) = assignment_to_witness(&[true, true]);
        assert_eq!(x, vec![1.0, 1.0, 1.0, -0.5]);
        assert_eq!(y, vec![-1.0, -1.0, -0.5, 1.0]);
        let n = 2;
        // e_{n+1} + e_{n+2} gadget sums to 1
        assert!((relu(x[n] + x[n + 1]) + relu(y[n] + y[n + 1]) - 1.0).abs() < 1e-12);
        // -2 e_{n+1} gadget sums to 1
        assert!((relu(-2.0 * x[n]) + relu(-2.0 * y[n]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn forward_soundness_on_satisfiable_formulas() {
        // satisfying assignment -> witness -> verification, several formulas
        let formulas = vec![
            Cnf6::new(2, vec![clause([1, 1, 2, 2, -1, -2])]).unwrap(),
            Cnf6::new(3, vec![clause([1, 2, 3, -1, -2, -3]), clause([1, 1, 2, 2, 3, 3])])
                .unwrap(),
            Cnf6::new(1, vec![clause([1, 1, 1, -1, -1, -1])]).unwrap(),
        ];
        for psi in formulas {
            let rev = make_reversible(&psi);
            let Some(assignment) = rev.brute_force_sat() else {
                continue;
            };
            let inst = reduce_sat_to_relusep(&rev);
            let (x, y) = assignment_to_witness(&assignment);
            let (ok, violations) = verify_witness(&inst, &x, &y, 1e-9);
            assert!(ok, "violations: {violations:?}");
        }
    }

    #[test]
    fn zero_witness_rejected() {
        let psi = Cnf6::new(1, vec![clause([1, 1, 1, -1, -1, -1])]).unwrap();
        let inst = reduce_sat_to_relusep(&make_reversible(&psi));
        let (ok, violations) = verify_witness(&inst, &[0.0; 3], &[0.0; 3], 1e-9);
        assert!(!ok);
        assert!(!violations.is_empty());
    }

    #[test]
    fn perturbed_witness_rejected() {
        let psi = Cnf6::new(2, vec![clause([1, 2, 1, 2, 1, 2])]).unwrap();
        let rev = make_reversible(&psi);
        let assignment = rev.brute_force_sat().unwrap();
        let inst = reduce_sat_to_relusep(&rev);
        let (mut x, y) = assignment_to_witness(&assignment);
        let tol = 1e-9;
        x[0] += 10.0 * tol; // feeds the tight e_1 gadget
        let (ok, _) = verify_witness(&inst, &x, &y, tol);
        assert!(!ok);
    }

    #[test]
    fn network_reduction_shapes_and_witness() {
        let psi = Cnf6::new(2, vec![clause([1, -2, 1, -2, 1, -2])]).unwrap();
        let rev = make_reversible(&psi);
        let inst = reduce_sat_to_relusep(&rev);
        let (alpha, x, a) = reduce_relusep_to_network(&inst);
        assert_eq!(a.cols(), inst.p_set.len() + inst.q_set.len());
        // |P| zeros then |Q| ones
        for j in 0..inst.p_set.len() {
            assert_eq!(a[(0, j)], 0.0);
        }
        for j in inst.p_set.len()..a.cols() {
            assert_eq!(a[(0, j)], 1.0);
        }
        let assignment = rev.brute_force_sat().unwrap();
        let (wx, wy) = assignment_to_witness(&assignment);
        let v = Matrix::from_rows(&[wx, wy]);
        let pred = alpha.matmul(&v.matmul(&x).map(relu));
        assert!(pred.sub(&a).max_abs() <= 1e-9);
    }

    #[test]
    fn empty_p_gives_all_ones_labels() {
        let inst = ReluSepInstance {
            dim: 3,
            p_set: vec![],
            q_set: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
        };
        let (_, _, a) = reduce_relusep_to_network(&inst);
        assert!(a.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn brute_force_finds_witness_iff_sat() {
        // satisfiable instance
        let psi = Cnf6::new(1, vec![clause([1, 1, 1, -1, -1, -1])]).unwrap();
        let rev = make_reversible(&psi);
        let inst = reduce_sat_to_relusep(&rev);
        let found = brute_force_relusep(&inst, 1u64 << 40).unwrap();
        let (x, y) = found.expect("witness exists");
        let (ok, violations) = verify_witness(&inst, &x, &y, 1e-7);
        assert!(ok, "{violations:?}");

        // unsatisfiable: u1 forced both ways
        let psi = Cnf6::new(1, vec![clause([1, 1, 1, 1, 1, 1])]).unwrap();
        let rev = make_reversible(&psi);
        let inst = reduce_sat_to_relusep(&rev);
        assert!(brute_force_relusep(&inst, 1u64 << 40).unwrap().is_none());
    }

    #[test]
    fn brute_force_budget_zero() {
        let inst = ReluSepInstance {
            dim: 2,
            p_set: vec![vec![1.0, 0.0]],
            q_set: vec![vec![0.0, 1.0]],
        };
        assert!(matches!(
            brute_force_relusep(&inst, 0),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn dimacs_roundtrip() {
        let psi = Cnf6::new(3, vec![clause([1, -2, 3, 3, -2, 1])]).unwrap();
        let text = psi.to_dimacs();
        let back = Cnf6::parse_dimacs(&text).unwrap();
        assert_eq!(psi, back);
        assert!(Cnf6::parse_dimacs("1 2 3 0\n").is_err()); // not 6 literals
    }
}
