use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{axpy, norm2, Scalar};

/// Dense N-way array.
///
/// Linearization is mode-1 fastest: element `(i_1, …, i_N)` (0-based) lives at
/// `i_1 + I_1·(i_2 + I_2·(i_3 + …))`. Modes are numbered from 1 throughout the
/// multilinear API.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor<T> {
    dims: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(dims: &[usize]) -> Self {
        let n = dims.iter().product();
        Self { dims: dims.to_vec(), data: vec![T::zero(); n] }
    }

    /// Wraps `data`, checking the length and that every entry is finite.
    pub fn from_vec(dims: &[usize], data: Vec<T>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Empty(format!("tensor dims {dims:?}")));
        }
        let n: usize = dims.iter().product();
        if data.len() != n {
            return shape_err(format!("{} values for dims {dims:?}", data.len()));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("tensor entry {pos}")));
        }
        Ok(Self { dims: dims.to_vec(), data })
    }

    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> T) -> Self {
        let mut t = Self::zeros(dims);
        let mut idx = vec![0usize; dims.len()];
        for slot in t.data.iter_mut() {
            *slot = f(&idx);
            increment(&mut idx, dims);
        }
        t
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
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

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut lin = 0;
        for (k, (&i, &d)) in idx.iter().zip(&self.dims).enumerate().rev() {
            debug_assert!(i < d, "index {i} out of range in mode {}", k + 1);
            lin = lin * d + i;
        }
        lin
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.data[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: T) {
        let k = self.linear_index(idx);
        self.data[k] = v;
    }

    pub fn frobenius_norm(&self) -> T {
        norm2(&self.data)
    }

    /// `‖self − other‖_F / ‖other‖_F` (absolute error when `other` is zero).
    pub fn relative_error(&self, other: &Tensor<T>) -> Result<T> {
        if self.dims != other.dims {
            return shape_err(format!("dims {:?} vs {:?}", self.dims, other.dims));
        }
        let diff: T = self.data.iter().zip(&other.data).map(|(&a, &b)| (a - b) * (a - b)).sum();
        let base = other.frobenius_norm();
        Ok(if base > T::zero() { diff.sqrt() / base } else { diff.sqrt() })
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode == 0 || mode > self.order() {
            return Err(Error::ModeOutOfRange { mode, order: self.order() });
        }
        Ok(())
    }

    /// Mode-`mode` unfolding: an `I_mode x ∏_{n≠mode} I_n` matrix.
    ///
    /// Columns follow the cyclic order `mode+1, …, N, 1, …, mode−1`, the first of
    /// these varying slowest. For modes `n` in that order with sizes `I_n`, the
    /// column of element `(i_1, …, i_N)` is the mixed-radix number
    /// `(((i_{mode+1})·I_{mode+2} + i_{mode+2})·I_{mode+3} + …)·I_{mode−1} + i_{mode−1}`.
    pub fn unfold(&self, mode: usize) -> Result<Matrix<T>> {
        self.check_mode(mode)?;
        let m = mode - 1;
        let rows = self.dims[m];
        let cols = self.data.len() / rows;
        let cyc = cyclic_modes(self.order(), m);
        let mut out = Matrix::zeros(rows, cols);
        let mut idx = vec![0usize; self.order()];
        for &v in &self.data {
            let col = cyc.iter().fold(0usize, |acc, &k| acc * self.dims[k] + idx[k]);
            out[(idx[m], col)] = v;
            increment(&mut idx, &self.dims);
        }
        Ok(out)
    }

    /// Inverse of [`Tensor::unfold`].
    pub fn fold(m: &Matrix<T>, mode: usize, dims: &[usize]) -> Result<Self> {
        if mode == 0 || mode > dims.len() {
            return Err(Error::ModeOutOfRange { mode, order: dims.len() });
        }
        let k = mode - 1;
        let total: usize = dims.iter().product();
        if m.rows() != dims[k] || m.rows() * m.cols() != total {
            return shape_err(format!(
                "{}x{} matrix cannot fold into dims {dims:?} along mode {mode}",
                m.rows(),
                m.cols()
            ));
        }
        let cyc = cyclic_modes(dims.len(), k);
        let mut t = Self::zeros(dims);
        let mut idx = vec![0usize; dims.len()];
        for slot in t.data.iter_mut() {
            let col = cyc.iter().fold(0usize, |acc, &j| acc * dims[j] + idx[j]);
            *slot = m[(idx[k], col)];
            increment(&mut idx, dims);
        }
        if let Some(pos) = t.data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("tensor entry {pos}")));
        }
        Ok(t)
    }

    /// n-mode product `self ×_mode a`, with `a` of shape `J x I_mode`.
    pub fn mode_product(&self, a: &Matrix<T>, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let m = mode - 1;
        let size = self.dims[m];
        if a.cols() != size {
            return shape_err(format!(
                "mode-{mode} product: matrix has {} columns, tensor mode size {size}",
                a.cols()
            ));
        }
        let left: usize = self.dims[..m].iter().product();
        let right: usize = self.dims[m + 1..].iter().product();
        let j_out = a.rows();
        let mut dims = self.dims.clone();
        dims[m] = j_out;
        let mut out = Self::zeros(&dims);
        for r in 0..right {
            let src = &self.data[r * left * size..(r + 1) * left * size];
            let dst = &mut out.data[r * left * j_out..(r + 1) * left * j_out];
            for j in 0..j_out {
                let arow = a.row(j);
                let dslice = &mut dst[j * left..(j + 1) * left];
                for (i, &coef) in arow.iter().enumerate() {
                    if coef != T::zero() {
                        axpy(coef, &src[i * left..(i + 1) * left], dslice);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Tensor<U> {
        Tensor { dims: self.dims.clone(), data: self.data.iter().map(|&x| f(x)).collect() }
    }
}

/// 0-based mode list `m+1, …, N−1, 0, …, m−1`.
fn cyclic_modes(order: usize, m: usize) -> Vec<usize> {
    (1..order).map(|k| (m + k) % order).collect()
}

/// Advances a mode-1-fastest multi-index.
pub(crate) fn increment(idx: &mut [usize], dims: &[usize]) {
    for (i, &d) in idx.iter_mut().zip(dims) {
        *i += 1;
        if *i < d {
            return;
        }
        *i = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enumerated(dims: &[usize]) -> Tensor<f64> {
        let n: usize = dims.iter().product();
        Tensor::from_vec(dims, (0..n).map(|k| k as f64 + 1.0).collect()).unwrap()
    }

    #[test]
    fn linearization_is_mode1_fastest() {
        let t = enumerated(&[2, 3, 4]);
        assert_eq!(t.get(&[1, 0, 0]), 2.0);
        assert_eq!(t.get(&[0, 1, 0]), 3.0);
        assert_eq!(t.get(&[0, 0, 1]), 7.0);
    }

    #[test]
    fn unfold_2x2x2_matches_index_formula() {
        let t = enumerated(&[2, 2, 2]);
        let u1 = t.unfold(1).unwrap();
        // column = i2·I3 + i3
        let mut want = Matrix::zeros(2, 4);
        for i1 in 0..2 {
            for i2 in 0..2 {
                for i3 in 0..2 {
                    want[(i1, i2 * 2 + i3)] = t.get(&[i1, i2, i3]);
                }
            }
        }
        assert_eq!(u1, want);
        // mode 3: column = i1·I2 + i2
        let u3 = t.unfold(3).unwrap();
        assert_eq!(u3[(1, 1)], t.get(&[0, 1, 1]));
        assert_eq!(u3[(0, 2)], t.get(&[1, 0, 0]));
    }

    #[test]
    fn zero_tensor_unfolds_to_zero() {
        let t = Tensor::<f64>::zeros(&[3, 4, 5]);
        let u = t.unfold(2).unwrap();
        assert_eq!(u.shape(), (4, 15));
        assert!(u.as_slice().iter().all(|&x| x == 0.0));
        let back = Tensor::fold(&Matrix::zeros(4, 15), 2, &[3, 4, 5]).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn mode_errors() {
        let t = enumerated(&[2, 2, 2]);
        assert!(matches!(t.unfold(0), Err(Error::ModeOutOfRange { .. })));
        assert!(matches!(t.unfold(4), Err(Error::ModeOutOfRange { .. })));
        assert!(Tensor::fold(&Matrix::<f64>::zeros(3, 4), 1, &[2, 2, 2]).is_err());
        assert!(t.mode_product(&Matrix::identity(3), 1).is_err());
    }

    #[test]
    fn mode_product_row_sums() {
        let t = Tensor::from_vec(&[2, 2, 2], vec![1.0; 8]).unwrap();
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let p = t.mode_product(&a, 1).unwrap();
        for i2 in 0..2 {
            for i3 in 0..2 {
                assert_eq!(p.get(&[0, i2, i3]), 3.0);
                assert_eq!(p.get(&[1, i2, i3]), 7.0);
            }
        }
    }

    #[test]
    fn mode_product_identity_and_shape_change() {
        let t = enumerated(&[2, 3, 4]);
        assert_eq!(t.mode_product(&Matrix::identity(3), 2).unwrap(), t);
        let a = Matrix::from_fn(5, 4, |i, j| (i + j) as f64);
        assert_eq!(t.mode_product(&a, 3).unwrap().dims(), &[2, 3, 5]);
    }

    #[test]
    fn from_vec_rejects_non_finite_and_bad_length() {
        assert!(matches!(Tensor::from_vec(&[2], vec![1.0, f64::NAN]), Err(Error::NonFinite(_))));
        assert!(Tensor::from_vec(&[2, 2], vec![1.0; 3]).is_err());
        assert!(matches!(Tensor::<f64>::from_vec(&[0, 2], vec![]), Err(Error::Empty(_))));
    }
}
