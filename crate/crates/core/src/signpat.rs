//! Sign patterns and enumeration of the orthants meeting a k-dimensional
//! row space.
//!
//! A sign pattern records where a vector is strictly positive. For a rank-k
//! basis `B` (k x n) the realizable patterns of `w B` over all `w` are found
//! by walking every k-subset of the 2n candidate tight constraints
//! `(wB)_j = 1`, `(wB)_j = 0`, solving the square system, and keeping the
//! patterns whose feasibility LP `(wB)_j >= 1 on S, <= 0 off S` admits a
//! witness.

use crate::error::{Error, Result};
use crate::numerics::{lp_feasible, rank, LinearProgram, Matrix, Relation};
use crate::RANK_TOL;
use std::collections::BTreeSet;

/// Subset of coordinates where a vector is strictly positive (0-based).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignPattern {
    length: usize,
    positives: Vec<usize>,
}

impl SignPattern {
    pub fn new(length: usize, mut positives: Vec<usize>) -> Self {
        positives.sort_unstable();
        positives.dedup();
        assert!(positives.iter().all(|&i| i < length), "index out of range");
        SignPattern { length, positives }
    }

    pub fn empty(length: usize) -> Self {
        SignPattern {
            length,
            positives: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty()
    }

    pub fn cardinality(&self) -> usize {
        self.positives.len()
    }

    pub fn positives(&self) -> &[usize] {
        &self.positives
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.positives.binary_search(&idx).is_ok()
    }

    pub fn complement_indices(&self) -> Vec<usize> {
        (0..self.length).filter(|i| !self.contains(*i)).collect()
    }

    /// Zeroes the coordinates outside the pattern (pattern-restricted
    /// rectification).
    pub fn mask(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.length);
        let mut out = vec![0.0; self.length];
        for &i in &self.positives {
            out[i] = v[i];
        }
        out
    }
}

/// Pattern of strictly-positive coordinates of `v` above `tol`.
pub fn sign_pattern(v: &[f64], tol: f64) -> SignPattern {
    SignPattern {
        length: v.len(),
        positives: v
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > tol)
            .map(|(i, _)| i)
            .collect(),
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut b = 1.0f64;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b
}

/// Feasibility LP for pattern `s` over the row space of `basis`:
/// `(w basis)_j >= 1` on the pattern, `<= 0` off it.
pub fn pattern_witness(basis: &Matrix, s: &SignPattern) -> Result<Option<Vec<f64>>> {
    let k = basis.rows();
    let mut lp = LinearProgram::new(k);
    for j in 0..basis.cols() {
        let coeffs = basis.col(j);
        if s.contains(j) {
            lp.add(coeffs, Relation::Ge, 1.0);
        } else {
            lp.add(coeffs, Relation::Le, 0.0);
        }
    }
    lp_feasible(&lp)
}

/// All sign patterns realizable as `sign_pattern(w * basis)` for some `w`,
/// canonicalized and deduplicated, sorted by cardinality then
/// lexicographically. The empty pattern (witness w = 0) is always present.
pub fn enumerate_subspace_patterns(basis: &Matrix) -> Result<Vec<SignPattern>> {
    let k = basis.rows();
    let n = basis.cols();
    if k == 0 {
        return Err(Error::RankDeficientBasis { rank: 0, k: 0 });
    }
    let r = rank(basis, RANK_TOL);
    if r < k {
        return Err(Error::RankDeficientBasis { rank: r, k });
    }
    if binomial(2 * n, k) > 1e7 {
        return Err(Error::BudgetExceeded(format!(
            "C({}, {}) subsets exceed the 1e7 enumeration budget",
            2 * n,
            k
        )));
    }

    // Candidate tight constraints: (wB)_j = 1 (index j) and (wB)_j = 0
    // (index n + j). Every realizable pattern has a vertex witness with k of
    // these tight, so solving each square system and reading off the pattern
    // covers everything; degenerate systems are skipped.
    let mut candidates: BTreeSet<Vec<usize>> = BTreeSet::new();
    candidates.insert(Vec::new());

    let total = 2 * n;
    let mut subset: Vec<usize> = (0..k).collect();
    'subsets: loop {
        // Build the k x k square system: rows are basis columns j with rhs 1
        // (constraint index j) or 0 (constraint index n + j).
        let mut sys = Matrix::zeros(k, k);
        let mut rhs = Matrix::zeros(k, 1);
        for (row, &c) in subset.iter().enumerate() {
            let j = c % n;
            let col = basis.col(j);
            for (t, &v) in col.iter().enumerate() {
                sys[(row, t)] = v;
            }
            rhs[(row, 0)] = if c < n { 1.0 } else { 0.0 };
        }
        let (w, residual) = crate::numerics::solve_exact(&sys, &rhs);
        if residual <= 1e-8 {
            let wv: Vec<f64> = (0..k).map(|i| w[(i, 0)]).collect();
            let y = basis.left_mul_vec(&wv);
            // Coordinates held tight at zero come back as +-1e-16 noise; a
            // small positive cutoff keeps them out of the recorded pattern.
            let boundary = 1e-9 * y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            candidates.insert(sign_pattern(&y, boundary).positives);
        }

        // next k-subset of [0, total)
        let mut i = k;
        while i > 0 {
            i -= 1;
            if subset[i] < total - k + i {
                subset[i] += 1;
                for t in i + 1..k {
                    subset[t] = subset[t - 1] + 1;
                }
                continue 'subsets;
            }
        }
        break;
    }

    // LP verification pass: keep only patterns with a feasible witness.
    let mut out: Vec<SignPattern> = Vec::new();
    for positives in candidates {
        let s = SignPattern::new(n, positives);
        if s.is_empty() {
            out.push(s);
            continue;
        }
        if pattern_witness(basis, &s)?.is_some() {
            out.push(s);
        }
    }
    out.sort_by(|a, b| {
        a.cardinality()
            .cmp(&b.cardinality())
            .then_with(|| a.positives.cmp(&b.positives))
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gaussian_matrix;
    use crate::rng::SeedStream;

    fn patterns_as_sets(ps: &[SignPattern]) -> BTreeSet<Vec<usize>> {
        ps.iter().map(|p| p.positives().to_vec()).collect()
    }

    #[test]
    fn sign_pattern_basics() {
        assert_eq!(sign_pattern(&[0.5, -1.0, 2.0], 0.0).positives(), &[0, 2]);
        assert!(sign_pattern(&[0.0, 0.0], 0.0).is_empty());
        assert_eq!(sign_pattern(&[1e-12, 1.0], 1e-9).positives(), &[1]);
    }

    #[test]
    fn k1_line_three_coords() {
        let basis = Matrix::from_rows(&[vec![1.0, -1.0, 2.0]]);
        let got = patterns_as_sets(&enumerate_subspace_patterns(&basis).unwrap());
        let want: BTreeSet<Vec<usize>> =
            [vec![], vec![0, 2], vec![1]].into_iter().collect();
        assert_eq!(got, want);
    }

    #[test]
    fn k1_scaling_symmetry() {
        let basis = Matrix::from_rows(&[vec![1.0, 1.0]]);
        let got = patterns_as_sets(&enumerate_subspace_patterns(&basis).unwrap());
        let want: BTreeSet<Vec<usize>> = [vec![], vec![0, 1]].into_iter().collect();
        assert_eq!(got, want);
    }

    #[test]
    fn rank_deficient_rejected() {
        let basis = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(
            enumerate_subspace_patterns(&basis),
            Err(Error::RankDeficientBasis { .. })
        ));
    }

    #[test]
    fn budget_guard() {
        let mut s = SeedStream::new(3);
        let basis = gaussian_matrix(6, 4000, 0.0, 1.0, &mut s);
        assert!(matches!(
            enumerate_subspace_patterns(&basis),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn k2_matches_monte_carlo_brute_force() {
        let mut stream = SeedStream::new(88);
        let basis = gaussian_matrix(2, 5, 0.0, 1.0, &mut stream);
        let enumerated = enumerate_subspace_patterns(&basis).unwrap();
        let got = patterns_as_sets(&enumerated);

        // brute force over random witnesses
        let mut brute: BTreeSet<Vec<usize>> = BTreeSet::new();
        brute.insert(vec![]);
        for _ in 0..1_000_000 {
            let w = [stream.next_normal(), stream.next_normal()];
            let y = basis.left_mul_vec(&w);
            brute.insert(sign_pattern(&y, 0.0).positives().to_vec());
        }
        for b in &brute {
            assert!(got.contains(b), "missing pattern {b:?}");
        }
        // cardinality bound: sum_{i<=k} C(2n, i) + 1
        let bound = 1.0 + binomial(10, 0) + binomial(10, 1) + binomial(10, 2);
        assert!((enumerated.len() as f64) <= bound);
    }

    #[test]
    fn soundness_every_pattern_has_witness() {
        let mut s = SeedStream::new(5);
        let basis = gaussian_matrix(2, 6, 0.0, 1.0, &mut s);
        for p in enumerate_subspace_patterns(&basis).unwrap() {
            if p.is_empty() {
                continue;
            }
            let w = pattern_witness(&basis, &p).unwrap();
            assert!(w.is_some(), "pattern {:?} lost its witness", p.positives());
        }
    }

    #[test]
    fn completeness_small_random_bases() {
        // Monte-Carlo witnesses never produce a pattern outside the
        // enumerated set, for k <= 2, n <= 8.
        let stream = SeedStream::new(41);
        for t in 0..10 {
            let mut s = stream.substream(t);
            let k = 1 + s.next_index(2);
            let n = 3 + s.next_index(6);
            let basis = gaussian_matrix(k, n, 0.0, 1.0, &mut s);
            let got = patterns_as_sets(&enumerate_subspace_patterns(&basis).unwrap());
            for _ in 0..20_000 {
                let w: Vec<f64> = (0..k).map(|_| 10.0 * s.next_normal()).collect();
                let y = basis.left_mul_vec(&w);
                let p = sign_pattern(&y, 0.0);
                assert!(
                    got.contains(p.positives()),
                    "trial {t}: witness pattern {:?} missing",
                    p.positives()
                );
            }
        }
    }
}
