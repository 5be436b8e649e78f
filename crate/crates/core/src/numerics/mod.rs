//! Dense linear-algebra and LP-feasibility kernels shared by all algorithms.
//!
//! [`Matrix`] is the universal carrier for `X, A, U, V, E`. Factorizations
//! run through nalgebra behind the contracts below; the simplex solver is
//! local (see [`simplex`]).

mod simplex;

pub use simplex::{lp_feasible, Constraint, LinearProgram, Relation};

use crate::error::{Error, Result};
use crate::rng::SeedStream;
use crate::RANK_TOL;
use nalgebra::DMatrix;

/// Dense row-major f64 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "data length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Column vector (n x 1).
    pub fn col_vector(v: &[f64]) -> Self {
        Matrix::from_vec(v.len(), 1, v.to_vec())
    }

    /// Row vector (1 x n).
    pub fn row_vector(v: &[f64]) -> Self {
        Matrix::from_vec(1, v.len(), v.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(l);
                let out_row = out.row_mut(i);
                for j in 0..other.cols {
                    out_row[j] += a * orow[j];
                }
            }
        }
        out
    }

    /// `v * self` for a row vector `v` of length `self.rows`.
    pub fn left_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &a) in v.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o += a * x;
            }
        }
        out
    }

    /// `self * v` for a column vector `v` of length `self.cols`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    pub fn col_norm(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self[(i, j)] * self[(i, j)]).sum::<f64>().sqrt()
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.row(i).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Keeps the columns listed in `idx`, in that order.
    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            let src = self.row(i);
            let dst = out.row_mut(i);
            for (t, &j) in idx.iter().enumerate() {
                dst[t] = src[j];
            }
        }
        out
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(idx.len(), self.cols);
        for (t, &i) in idx.iter().enumerate() {
            out.row_mut(t).copy_from_slice(self.row(i));
        }
        out
    }

    /// First `l` columns.
    pub fn prefix_cols(&self, l: usize) -> Matrix {
        assert!(l <= self.cols);
        let idx: Vec<usize> = (0..l).collect();
        self.select_cols(&idx)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub(crate) fn to_na(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(self.rows, self.cols, self.data.iter().cloned())
    }

}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Thin SVD with singular values sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Orthonormal columns, `rows x r`.
    pub left: Matrix,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
    /// Orthonormal rows, `r x cols`.
    pub right: Matrix,
}

impl SvdResult {
    /// Number of singular values above `rank_tol * sigma_max`.
    pub fn rank(&self, rank_tol: f64) -> usize {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        if smax <= 0.0 {
            return 0;
        }
        self.singular_values
            .iter()
            .filter(|&&s| s > rank_tol * smax)
            .count()
    }

    pub fn reconstruct(&self) -> Matrix {
        let r = self.singular_values.len();
        let mut scaled = self.right.clone();
        for i in 0..r {
            let s = self.singular_values[i];
            for v in scaled.row_mut(i) {
                *v *= s;
            }
        }
        self.left.matmul(&scaled)
    }
}

/// Thin SVD of `a`, singular values sorted nonincreasing.
///
/// Wide inputs are decomposed through their transpose (the tall path of the
/// backend is the reliable one), and every result is verified against the
/// input; on a backend misfire the factorization is rebuilt from a symmetric
/// eigendecomposition of the small Gram matrix.
pub fn svd(a: &Matrix) -> SvdResult {
    assert!(!a.is_empty(), "svd of empty matrix");
    let result = if a.cols() > a.rows() {
        let t = svd_tall(&a.transpose());
        SvdResult {
            left: t.right.transpose(),
            singular_values: t.singular_values,
            right: t.left.transpose(),
        }
    } else {
        svd_tall(a)
    };
    let err = result.reconstruct().sub(a).frob_norm();
    if err <= 1e-9 * a.frob_norm().max(1e-300) {
        return result;
    }
    svd_gram(a)
}

fn svd_tall(a: &Matrix) -> SvdResult {
    let na = a.to_na();
    let s = na.svd(true, true);
    let u = s.u.as_ref().expect("svd U");
    let vt = s.v_t.as_ref().expect("svd Vt");
    let mut order: Vec<usize> = (0..s.singular_values.len()).collect();
    order.sort_by(|&i, &j| s.singular_values[j].partial_cmp(&s.singular_values[i]).unwrap());
    let r = order.len();
    let mut left = Matrix::zeros(a.rows(), r);
    let mut right = Matrix::zeros(r, a.cols());
    let mut sv = Vec::with_capacity(r);
    for (t, &i) in order.iter().enumerate() {
        sv.push(s.singular_values[i]);
        for p in 0..a.rows() {
            left[(p, t)] = u[(p, i)];
        }
        for q in 0..a.cols() {
            right[(t, q)] = vt[(i, q)];
        }
    }
    SvdResult {
        left,
        singular_values: sv,
        right,
    }
}

/// Fallback factorization via the eigendecomposition of the smaller Gram
/// matrix. The eigenvalues themselves only carry half precision near zero,
/// so the singular values are recovered by re-multiplying the orthonormal
/// eigenvectors against the input (a plain inner product, accurate to
/// machine epsilon times the top singular value) and the resulting factor
/// rows are cleaned with one modified Gram-Schmidt pass.
fn svd_gram(a: &Matrix) -> SvdResult {
    let (m, n) = (a.rows(), a.cols());
    if n > m {
        let t = svd_gram(&a.transpose());
        return SvdResult {
            left: t.right.transpose(),
            singular_values: t.singular_values,
            right: t.left.transpose(),
        };
    }
    // tall or square: Gram is n x n over columns
    let gram = a.transpose().matmul(a);
    let sym = gram.to_na().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sym.eigenvalues[j].partial_cmp(&sym.eigenvalues[i]).unwrap());
    let mut right_t = Matrix::zeros(n, n); // columns are right singular vectors
    for (t, &i) in order.iter().enumerate() {
        for p in 0..n {
            right_t[(p, t)] = sym.eigenvectors[(p, i)];
        }
    }
    // W = A V: columns are sigma_i * u_i up to Gram cross-talk; MGS in
    // decreasing order restores orthogonality and reads off sigma
    let mut w = a.matmul(&right_t);
    let mut sv = vec![0.0f64; n];
    let mut left = Matrix::zeros(m, n);
    let floor = {
        let total = w.frob_norm();
        1e-14 * total.max(1e-300)
    };
    for i in 0..n {
        // subtract projections onto accepted left vectors
        let mut col = w.col(i);
        for j in 0..i {
            if sv[j] == 0.0 {
                continue;
            }
            let proj: f64 = (0..m).map(|p| left[(p, j)] * col[p]).sum();
            for (p, c) in col.iter_mut().enumerate() {
                *c -= proj * left[(p, j)];
            }
        }
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= floor {
            sv[i] = 0.0;
            continue;
        }
        sv[i] = norm;
        for (p, c) in col.iter().enumerate() {
            left[(p, i)] = c / norm;
        }
        w.set_col(i, &col);
    }
    // re-sort in case MGS reordered magnitudes across near-ties
    let mut order2: Vec<usize> = (0..n).collect();
    order2.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap());
    let mut left_sorted = Matrix::zeros(m, n);
    let mut right_sorted = Matrix::zeros(n, n);
    let mut sv_sorted = Vec::with_capacity(n);
    for (t, &i) in order2.iter().enumerate() {
        sv_sorted.push(sv[i]);
        for p in 0..m {
            left_sorted[(p, t)] = left[(p, i)];
        }
        for q in 0..n {
            right_sorted[(t, q)] = right_t[(q, i)];
        }
    }
    // zero-sigma directions keep their (orthonormal) Gram eigenvectors on
    // the right; fill the left with zeros, harmless for every consumer
    SvdResult {
        left: left_sorted,
        singular_values: sv_sorted,
        right: right_sorted,
    }
}

/// Numerical rank at relative tolerance `rank_tol`.
pub fn rank(a: &Matrix, rank_tol: f64) -> usize {
    svd(a).rank(rank_tol)
}

/// Condition number over the nonzero spectrum: sigma_max / sigma_min of the
/// rank-r truncation, r inferred at `RANK_TOL`.
pub fn cond_number(a: &Matrix) -> Result<f64> {
    let s = svd(a);
    let r = s.rank(RANK_TOL);
    if r == 0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(s.singular_values[0] / s.singular_values[r - 1])
}

/// Moore-Penrose pseudo-inverse; singular values below `rcond * sigma_max`
/// are treated as zero.
pub fn pinv(a: &Matrix, rcond: f64) -> Matrix {
    let s = svd(a);
    let smax = s.singular_values.first().copied().unwrap_or(0.0);
    let cut = rcond * smax;
    // pinv = V * diag(1/s) * U^T
    let r = s.singular_values.len();
    let mut vt_scaled = Matrix::zeros(r, a.cols());
    for i in 0..r {
        let siv = s.singular_values[i];
        if siv > cut && siv > 0.0 {
            let inv = 1.0 / siv;
            for j in 0..a.cols() {
                vt_scaled[(i, j)] = s.right[(i, j)] * inv;
            }
        }
    }
    vt_scaled.transpose().matmul(&s.left.transpose())
}

/// Orthogonal projector (n x n) onto the row span of `rows_mat` (r x n),
/// built from an SVD orthonormal basis. A zero input yields the zero
/// projector.
pub fn projector(rows_mat: &Matrix) -> Matrix {
    let n = rows_mat.cols();
    if rows_mat.rows() == 0 {
        return Matrix::zeros(n, n);
    }
    let s = svd(rows_mat);
    let r = s.rank(RANK_TOL);
    if r == 0 {
        return Matrix::zeros(n, n);
    }
    let basis = s.right.select_rows(&(0..r).collect::<Vec<_>>());
    basis.transpose().matmul(&basis)
}

/// Orthonormal basis (rows) of the row span of `rows_mat`, at `RANK_TOL`.
pub fn row_space_basis(rows_mat: &Matrix) -> Matrix {
    if rows_mat.rows() == 0 {
        return Matrix::zeros(0, rows_mat.cols());
    }
    let s = svd(rows_mat);
    let r = s.rank(RANK_TOL);
    s.right.select_rows(&(0..r).collect::<Vec<_>>())
}

/// Minimum-norm least-squares solution of `a * x = b`, with the residual
/// `||a x - b||_F` so callers can tell exact systems from inconsistent ones.
pub fn solve_exact(a: &Matrix, b: &Matrix) -> (Matrix, f64) {
    assert_eq!(a.rows(), b.rows(), "solve_exact shape mismatch");
    let x = pinv(a, RANK_TOL).matmul(b);
    let residual = a.matmul(&x).sub(b).frob_norm();
    (x, residual)
}

/// I.i.d. normal matrix from a counter-based stream; identical arguments
/// produce identical output.
pub fn gaussian_matrix(
    rows: usize,
    cols: usize,
    mean: f64,
    stddev: f64,
    stream: &mut SeedStream,
) -> Matrix {
    assert!(stddev >= 0.0, "negative stddev");
    let mut m = Matrix::zeros(rows, cols);
    for v in m.data.iter_mut() {
        *v = mean + stddev * stream.next_normal();
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RANK_TOL;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut s = SeedStream::new(seed);
        gaussian_matrix(rows, cols, 0.0, 1.0, &mut s)
    }

    #[test]
    fn svd_identity() {
        let s = svd(&Matrix::identity(3));
        for &v in &s.singular_values {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn svd_diag_rank() {
        let s = svd(&Matrix::from_diag(&[3.0, 0.0]));
        assert!((s.singular_values[0] - 3.0).abs() < 1e-12);
        assert!(s.singular_values[1].abs() < 1e-12);
        assert_eq!(s.rank(1e-9), 1);
    }

    #[test]
    fn svd_reconstructs_random() {
        let a = random_matrix(5, 3, 17);
        let rec = svd(&a).reconstruct();
        assert!(rec.sub(&a).frob_norm() <= 1e-10 * a.frob_norm());
    }

    #[test]
    fn svd_sorted_and_orthonormal() {
        let a = random_matrix(6, 4, 3);
        let s = svd(&a);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let utu = s.left.transpose().matmul(&s.left);
        assert!(utu.sub(&Matrix::identity(4)).frob_norm() < 1e-10);
        let vvt = s.right.matmul(&s.right.transpose());
        assert!(vvt.sub(&Matrix::identity(4)).frob_norm() < 1e-10);
    }

    #[test]
    fn cond_identity_and_diag() {
        assert!((cond_number(&Matrix::identity(4)).unwrap() - 1.0).abs() < 1e-12);
        assert!((cond_number(&Matrix::from_diag(&[4.0, 2.0])).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(
            cond_number(&Matrix::zeros(2, 2)),
            Err(Error::ZeroMatrix)
        ));
    }

    #[test]
    fn kappa_of_lower_bound_construction() {
        // rows (1,a)/sqrt(1+a^2) and (1,-a)/sqrt(1+a^2) have kappa = 1/a
        let a = 0.1f64;
        let z = (1.0 + a * a).sqrt();
        let v = Matrix::from_rows(&[vec![1.0 / z, a / z], vec![1.0 / z, -a / z]]);
        assert!((cond_number(&v).unwrap() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn pinv_identity_and_diag() {
        let p = pinv(&Matrix::identity(3), 1e-12);
        assert!(p.sub(&Matrix::identity(3)).frob_norm() < 1e-12);
        let p = pinv(&Matrix::from_diag(&[2.0, 0.0]), 1e-12);
        assert!(p.sub(&Matrix::from_diag(&[0.5, 0.0])).frob_norm() < 1e-12);
    }

    #[test]
    fn pinv_left_inverse_full_column_rank() {
        let a = random_matrix(4, 2, 5);
        let pa = pinv(&a, 1e-12).matmul(&a);
        assert!(pa.sub(&Matrix::identity(2)).frob_norm() < 1e-8);
    }

    #[test]
    fn pinv_moore_penrose_identities() {
        let a = random_matrix(4, 3, 11);
        let p = pinv(&a, 1e-12);
        assert!(a.matmul(&p).matmul(&a).sub(&a).frob_norm() < 1e-8);
        assert!(p.matmul(&a).matmul(&p).sub(&p).frob_norm() < 1e-8);
        let ap = a.matmul(&p);
        assert!(ap.sub(&ap.transpose()).frob_norm() < 1e-8);
        let pa = p.matmul(&a);
        assert!(pa.sub(&pa.transpose()).frob_norm() < 1e-8);
    }

    #[test]
    fn projector_axis_and_full() {
        let p = projector(&Matrix::from_rows(&[vec![1.0, 0.0, 0.0]]));
        assert!(p.sub(&Matrix::from_diag(&[1.0, 0.0, 0.0])).frob_norm() < 1e-12);
        let p = projector(&Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]));
        assert!(p.sub(&Matrix::identity(2)).frob_norm() < 1e-10);
        let z = projector(&Matrix::zeros(2, 3));
        assert!(z.frob_norm() == 0.0);
    }

    #[test]
    fn projector_idempotent_and_fixes_rows() {
        let rows = random_matrix(2, 5, 23);
        let p = projector(&rows);
        let n = p.rows() as f64;
        assert!(p.matmul(&p).sub(&p).frob_norm() <= 1e-8 * n);
        assert!(p.transpose().sub(&p).frob_norm() <= 1e-12 * n);
        let rt = rows.transpose();
        assert!(p.matmul(&rt).sub(&rt).frob_norm() < 1e-8);
    }

    #[test]
    fn solve_exact_cases() {
        let b = Matrix::col_vector(&[1.0, 2.0, 3.0]);
        let (x, res) = solve_exact(&Matrix::identity(3), &b);
        assert!(x.sub(&b).frob_norm() < 1e-12 && res < 1e-12);

        // inconsistent overdetermined system
        let a = Matrix::from_rows(&[vec![1.0], vec![1.0]]);
        let b = Matrix::col_vector(&[0.0, 1.0]);
        let (x, res) = solve_exact(&a, &b);
        assert!((x[(0, 0)] - 0.5).abs() < 1e-12);
        assert!(res > crate::EQ_TOL);

        let a = random_matrix(4, 4, 31);
        let x0 = random_matrix(4, 1, 32);
        let b = a.matmul(&x0);
        let (x, res) = solve_exact(&a, &b);
        assert!(x.sub(&x0).frob_norm() < 1e-9, "res {res}");
    }

    #[test]
    fn gaussian_matrix_deterministic_and_degenerate() {
        let mut s1 = SeedStream::new(5).substream(1);
        let mut s2 = SeedStream::new(5).substream(1);
        let a = gaussian_matrix(3, 4, 0.0, 1.0, &mut s1);
        let b = gaussian_matrix(3, 4, 0.0, 1.0, &mut s2);
        assert_eq!(a, b);

        let mut s = SeedStream::new(1);
        let c = gaussian_matrix(2, 2, 7.0, 0.0, &mut s);
        assert!(c.data().iter().all(|&x| x == 7.0));
    }

    #[test]
    fn gaussian_matrix_moments() {
        let mut s = SeedStream::new(77);
        let a = gaussian_matrix(100, 1000, 2.0, 3.0, &mut s);
        let n = (a.rows() * a.cols()) as f64;
        let mean = a.data().iter().sum::<f64>() / n;
        let var = a.data().iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        // three standard errors
        let se_mean = 3.0 / n.sqrt();
        let se_var = 9.0 * (2.0 / n).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * se_mean, "mean {mean}");
        assert!((var - 9.0).abs() < 3.0 * se_var, "var {var}");
    }

    #[test]
    fn pinv_perturbation_bound() {
        // perturbation bound: small relative input changes move the
        // pseudo-inverse by at most a constant multiple
        let stream = SeedStream::new(900);
        for trial in 0..20 {
            let mut s = stream.substream(trial);
            let b = {
                let mut b = gaussian_matrix(5, 3, 0.0, 1.0, &mut s);
                let top = svd(&b).singular_values[0];
                // scale so spectral norm is in [1, 3]
                b = b.scale((1.0 + 2.0 * s.next_f64()) / top);
                b
            };
            let kappa = cond_number(&b).unwrap();
            let eps = 0.25 * s.next_f64().max(0.05);
            let mut e = gaussian_matrix(5, 3, 0.0, 1.0, &mut s);
            e = e.scale(eps / (kappa * kappa) / e.frob_norm());
            let diff = pinv(&b.add(&e), RANK_TOL).sub(&pinv(&b, RANK_TOL)).frob_norm();
            assert!(diff <= 10.0 * eps, "trial {trial}: diff {diff} vs eps {eps}");
        }
    }

    #[test]
    fn gaussian_operator_norm_bounds() {
        // sigma range for k x n standard normal with n >= 10k
        let mut ok = 0;
        let k = 3;
        let n = 40;
        for seed in 0..100u64 {
            let mut s = SeedStream::new(4000 + seed);
            let g = gaussian_matrix(k, n, 0.0, 1.0, &mut s);
            let sv = svd(&g).singular_values;
            let (smax, smin) = (sv[0], sv[k - 1]);
            let lo = (n as f64).sqrt() / 3.0;
            let hi = 2.0 * (n as f64).sqrt();
            if smin >= lo && smax <= hi {
                ok += 1;
            }
        }
        assert!(ok >= 99, "only {ok}/100 inside the singular-value envelope");
    }
}
