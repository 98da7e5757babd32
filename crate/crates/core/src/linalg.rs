//! Dense row-major matrices and the handful of factorizations the crate needs:
//! Householder QR, one-sided Jacobi SVD and least squares.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Result};
use crate::scalar::{axpy, dot, norm2, Scalar};

/// Dense matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return shape_err(format!("{} values for a {rows}x{cols} matrix", data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return shape_err("ragged rows");
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[T]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        const B: usize = 32;
        for ib in (0..self.rows).step_by(B) {
            for jb in (0..self.cols).step_by(B) {
                for i in ib..(ib + B).min(self.rows) {
                    for j in jb..(jb + B).min(self.cols) {
                        out.data[j * self.rows + i] = self.data[i * self.cols + j];
                    }
                }
            }
        }
        out
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != other.rows {
            return shape_err(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            ));
        }
        let bt = other.transpose();
        let mut out = Matrix::zeros(self.rows, other.cols);
        gemm_nt(self, &bt, &mut out, false);
        Ok(out)
    }

    /// `self * v`.
    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return shape_err(format!("matvec {}x{} by length {}", self.rows, self.cols, v.len()));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `selfᵀ * v`.
    pub fn tr_matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.rows {
            return shape_err(format!("tr_matvec {}x{} by length {}", self.rows, self.cols, v.len()));
        }
        let mut out = vec![T::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            axpy(vi, self.row(i), &mut out);
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> T {
        norm2(&self.data)
    }

    /// Keeps the first `k` columns.
    pub fn leading_columns(&self, k: usize) -> Matrix<T> {
        Matrix::from_fn(self.rows, k, |i, j| self[(i, j)])
    }

    /// Largest `|AᵀA - I|` entry.
    pub fn orthonormality_error(&self) -> T {
        let at = self.transpose();
        let mut worst = T::zero();
        for i in 0..self.cols {
            for j in 0..self.cols {
                let g = dot(at.row(i), at.row(j));
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// `c (+)= op(a) * op(b)` for row-major matrices, `op` being identity or transpose.
///
/// Shapes are checked against the transposed views; panics on mismatch.
pub fn gemm<T: Scalar>(a: &Matrix<T>, trans_a: bool, b: &Matrix<T>, trans_b: bool, c: &mut Matrix<T>, accumulate: bool) {
    let (m, k, rsa, csa) = if trans_a { (a.cols, a.rows, 1, a.cols) } else { (a.rows, a.cols, a.cols, 1) };
    let (kb, n, rsb, csb) = if trans_b { (b.cols, b.rows, 1, b.cols) } else { (b.rows, b.cols, b.cols, 1) };
    assert_eq!(k, kb, "gemm inner dimension");
    assert_eq!((c.rows, c.cols), (m, n), "gemm output shape");
    if m == 0 || n == 0 {
        return;
    }
    let beta = if accumulate { T::one() } else { T::zero() };
    if k == 0 {
        if !accumulate {
            c.data.fill(T::zero());
        }
        return;
    }
    // SAFETY: strides and extents describe exactly the row-major buffers checked above.
    unsafe {
        T::gemm_strided(
            m,
            k,
            n,
            T::one(),
            &a.data,
            rsa as isize,
            csa as isize,
            &b.data,
            rsb as isize,
            csb as isize,
            beta,
            &mut c.data,
            c.cols as isize,
            1,
        );
    }
}

/// `c (+)= a * bᵀ` where `a` is `m x k`, `b` is `n x k` and `c` is `m x n`.
pub fn gemm_nt<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, c: &mut Matrix<T>, accumulate: bool) {
    gemm(a, false, b, true, c, accumulate)
}

/// Upper-triangular factor `R` (`n x n`) of the Householder QR of a tall `m x n` matrix.
pub fn householder_r<T: Scalar>(a: &Matrix<T>) -> Matrix<T> {
    let (m, n) = a.shape();
    assert!(m >= n, "householder_r expects a tall matrix");
    // column-major working copy
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    for k in 0..n {
        let alpha = {
            let x = &cols[k][k..];
            let nx = norm2(x);
            if nx == T::zero() {
                continue;
            }
            if x[0] > T::zero() {
                -nx
            } else {
                nx
            }
        };
        let mut v: Vec<T> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2 = dot(&v, &v);
        if vnorm2 == T::zero() {
            continue;
        }
        for col in cols.iter_mut().skip(k) {
            let tail = &mut col[k..];
            let f = T::lit(2.0) * dot(&v, tail) / vnorm2;
            axpy(-f, &v, tail);
        }
    }
    Matrix::from_fn(n, n, |i, j| if i <= j { cols[j][i] } else { T::zero() })
}

/// Result of one-sided Jacobi orthogonalization of the columns of `B`:
/// `B V = [b_1 .. b_n]` with mutually orthogonal `b_j`, `V` orthogonal.
struct JacobiColumns<T> {
    /// Orthogonalized columns `b_j`.
    cols: Vec<Vec<T>>,
    /// Accumulated rotations, stored by column.
    v_cols: Vec<Vec<T>>,
}

const MAX_SWEEPS: usize = 80;

fn jacobi_columns<T: Scalar>(mut cols: Vec<Vec<T>>) -> JacobiColumns<T> {
    let n = cols.len();
    let mut v_cols: Vec<Vec<T>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let tol = T::epsilon() * T::lit(4.0);
    let total: T = cols.iter().map(|c| dot(c, c)).sum();
    let tiny = T::min_positive_value().max(total * T::epsilon() * T::epsilon() * T::epsilon());
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if alpha <= tiny || beta <= tiny || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut cols, p, q, c, s);
                rotate_pair(&mut v_cols, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    JacobiColumns { cols, v_cols }
}

fn rotate_pair<T: Scalar>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Thin singular value decomposition `A = U diag(σ) Vᵀ` of an `m x n` matrix
/// with `m >= n`; singular values are sorted non-increasing.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// `m x n`; columns belonging to zero singular values are zero.
    pub u: Matrix<T>,
    pub sigma: Vec<T>,
    /// `n x n`, orthogonal.
    pub v: Matrix<T>,
}

pub fn svd_tall<T: Scalar>(a: &Matrix<T>) -> Svd<T> {
    let (m, n) = a.shape();
    assert!(m >= n, "svd_tall expects rows >= cols");
    let jc = jacobi_columns((0..n).map(|j| a.column(j)).collect());
    let norms: Vec<T> = jc.cols.iter().map(|c| norm2(c)).collect();
    let order = descending_order(&norms);
    let mut u = Matrix::zeros(m, n);
    let mut v = Matrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        if s > T::zero() {
            let col: Vec<T> = jc.cols[j].iter().map(|&x| x / s).collect();
            u.set_column(k, &col);
        }
        v.set_column(k, &jc.v_cols[j]);
    }
    Svd { u, sigma, v }
}

/// Left singular vectors (`m x m`, orthogonal) and the `m` singular values of an
/// `m x n` matrix of any aspect ratio; values beyond `min(m, n)` are zero.
///
/// Works on `Aᵀ`: one-sided Jacobi on the columns of `Aᵀ` (or of the `R` factor of
/// its QR when `Aᵀ` is tall) accumulates exactly the left singular basis of `A`,
/// which therefore stays orthonormal even where singular values vanish.
pub fn left_singular<T: Scalar>(a: &Matrix<T>) -> (Matrix<T>, Vec<T>) {
    let (m, n) = a.shape();
    let at = a.transpose();
    let work = if n > m { householder_r(&at) } else { at };
    let jc = jacobi_columns((0..m).map(|j| work.column(j)).collect());
    let norms: Vec<T> = jc.cols.iter().map(|c| norm2(c)).collect();
    let order = descending_order(&norms);
    let mut u = Matrix::zeros(m, m);
    let mut sigma = Vec::with_capacity(m);
    for (k, &j) in order.iter().enumerate() {
        sigma.push(norms[j]);
        u.set_column(k, &jc.v_cols[j]);
    }
    (u, sigma)
}

fn descending_order<T: Scalar>(x: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    // stable: ties keep original column order
    idx.sort_by(|&a, &b| x[b].partial_cmp(&x[a]).unwrap_or(std::cmp::Ordering::Equal));
    idx
}

/// Least-squares solution of `A x ≈ b`.
#[derive(Debug, Clone)]
pub struct LstsqSolution<T> {
    pub x: Vec<T>,
    pub residual_norm: T,
    /// Set when `A` was numerically rank deficient; `x` is then the minimum-norm solution.
    pub rank_deficient: bool,
}

/// Solves `min ‖A x − b‖` for tall `A` with Householder QR, falling back to the
/// SVD minimum-norm solution when `R` has a diagonal below `1e-12 · max|R_kk|`.
pub fn lstsq<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<LstsqSolution<T>> {
    let (m, n) = a.shape();
    if b.len() != m {
        return shape_err(format!("lstsq: {m} rows but rhs of length {}", b.len()));
    }
    if m < n {
        return Ok(lstsq_svd(a, b));
    }
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let mut rhs = b.to_vec();
    for k in 0..n {
        let nx = norm2(&cols[k][k..]);
        if nx == T::zero() {
            continue;
        }
        let alpha = if cols[k][k] > T::zero() { -nx } else { nx };
        let mut v: Vec<T> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vv = dot(&v, &v);
        if vv == T::zero() {
            continue;
        }
        for col in cols.iter_mut().skip(k) {
            let tail = &mut col[k..];
            let f = T::lit(2.0) * dot(&v, tail) / vv;
            axpy(-f, &v, tail);
        }
        let f = T::lit(2.0) * dot(&v, &rhs[k..]) / vv;
        axpy(-f, &v, &mut rhs[k..]);
    }
    let rmax = (0..n).map(|k| cols[k][k].abs()).fold(T::zero(), T::max);
    let tol = T::lit(1e-12) * rmax;
    if rmax == T::zero() || (0..n).any(|k| cols[k][k].abs() <= tol) {
        return Ok(lstsq_svd(a, b));
    }
    let mut x = vec![T::zero(); n];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for j in (k + 1)..n {
            s -= cols[j][k] * x[j];
        }
        x[k] = s / cols[k][k];
    }
    let residual_norm = norm2(&rhs[n..]);
    Ok(LstsqSolution { x, residual_norm, rank_deficient: false })
}

fn lstsq_svd<T: Scalar>(a: &Matrix<T>, b: &[T]) -> LstsqSolution<T> {
    let (m, n) = a.shape();
    // work on the tall orientation; for wide A use Aᵀ = U Σ Vᵀ, so A = V Σ Uᵀ
    let (svd, wide) = if m >= n { (svd_tall(a), false) } else { (svd_tall(&a.transpose()), true) };
    let smax = svd.sigma.first().copied().unwrap_or(T::zero());
    let tol = T::lit(1e-12) * smax;
    let r = svd.sigma.len();
    let mut x = vec![T::zero(); n];
    let mut full_rank = true;
    for k in 0..r {
        let s = svd.sigma[k];
        if s <= tol || s == T::zero() {
            full_rank = false;
            continue;
        }
        if wide {
            // x = U Σ⁻¹ Vᵀ b
            let coef = dot(&svd.v.column(k), b) / s;
            axpy(coef, &svd.u.column(k), &mut x);
        } else {
            let coef = dot(&svd.u.column(k), b) / s;
            axpy(coef, &svd.v.column(k), &mut x);
        }
    }
    if wide || r < n {
        full_rank = false;
    }
    let fit = a.matvec(&x).expect("shapes checked");
    let resid: Vec<T> = b.iter().zip(&fit).map(|(&bi, &fi)| bi - fi).collect();
    LstsqSolution { x, residual_norm: norm2(&resid), rank_deficient: !full_rank }
}

/// Solves a small symmetric positive definite system by Cholesky; `None` if not SPD.
pub fn cholesky_solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Option<Vec<T>> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= T::zero() || !s.is_finite() {
                    return None;
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn naive_matmul(a: &Matrix<f64>, b: &Matrix<f64>) -> Matrix<f64> {
        Matrix::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum())
    }

    #[test]
    fn matmul_matches_naive_on_odd_shapes() {
        for (m, k, n) in [(1, 1, 1), (3, 5, 7), (5, 9, 2), (8, 3, 11)] {
            let a = random(m, k, 1);
            let b = random(k, n, 2);
            let got = a.matmul(&b).unwrap();
            let want = naive_matmul(&a, &b);
            for (x, y) in got.as_slice().iter().zip(want.as_slice()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matmul_shape_error() {
        assert!(random(2, 3, 0).matmul(&random(2, 3, 0)).is_err());
    }

    #[test]
    fn svd_reconstructs_and_is_orthonormal() {
        let a = random(9, 5, 3);
        let svd = svd_tall(&a);
        assert!(svd.u.orthonormality_error() < 1e-12);
        assert!(svd.v.orthonormality_error() < 1e-12);
        assert!(svd.sigma.windows(2).all(|w| w[0] >= w[1]));
        let us = Matrix::from_fn(9, 5, |i, j| svd.u[(i, j)] * svd.sigma[j]);
        let back = us.matmul(&svd.v.transpose()).unwrap();
        for (x, y) in back.as_slice().iter().zip(a.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn left_singular_wide_and_tall_agree_on_spectrum() {
        let a = random(4, 30, 5);
        let (u, s) = left_singular(&a);
        assert!(u.orthonormality_error() < 1e-12);
        let svd = svd_tall(&a.transpose());
        for (x, y) in s.iter().zip(&svd.sigma) {
            assert!((x - y).abs() < 1e-12);
        }
        // more rows than columns: trailing values are zero, basis still complete
        let tall = random(6, 2, 7);
        let (u, s) = left_singular(&tall);
        assert_eq!(s.len(), 6);
        assert!(u.orthonormality_error() < 1e-12);
        assert!(s[2..].iter().all(|&x| x < 1e-12));
    }

    #[test]
    fn lstsq_full_rank_and_deficient() {
        let a = random(10, 4, 11);
        let x_true = vec![0.5, -1.0, 2.0, 0.25];
        let b = a.matvec(&x_true).unwrap();
        let sol = lstsq(&a, &b).unwrap();
        assert!(!sol.rank_deficient);
        for (x, y) in sol.x.iter().zip(&x_true) {
            assert!((x - y).abs() < 1e-12);
        }
        // duplicate column: minimum-norm solution splits the weight evenly
        let dup = Matrix::from_fn(5, 2, |i, _| i as f64 + 1.0);
        let b: Vec<f64> = (0..5).map(|i| 2.0 * (i as f64 + 1.0)).collect();
        let sol = lstsq(&dup, &b).unwrap();
        assert!(sol.rank_deficient);
        assert!((sol.x[0] - 1.0).abs() < 1e-10 && (sol.x[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cholesky_solves_spd() {
        let a = random(6, 4, 9);
        let ata = a.transpose().matmul(&a).unwrap();
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let x = cholesky_solve(&ata, &b).unwrap();
        let back = ata.matvec(&x).unwrap();
        for (x, y) in back.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!(cholesky_solve(&Matrix::<f64>::zeros(2, 2), &[1.0, 1.0]).is_none());
    }
}
