use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{shape_err, Error, Result};
use crate::linalg::{left_singular, Matrix};
use crate::posegen::Axis;
use crate::scalar::{axpy, Scalar};

/// Singular values of one mode unfolding, non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum<T> {
    /// 1-based mode index.
    pub mode: usize,
    pub singular_values: Vec<T>,
}

impl<T: Scalar> ModeSpectrum<T> {
    /// Fraction `Σ_{i≤k} σ_i² / Σ_i σ_i²` of the mode energy held by the leading `k` components.
    pub fn energy_ratio(&self, k: usize) -> Result<T> {
        energy_ratio(self, k)
    }
}

pub fn energy_ratio<T: Scalar>(s: &ModeSpectrum<T>, k: usize) -> Result<T> {
    let n = s.singular_values.len();
    if n == 0 {
        return Err(Error::Empty(format!("spectrum of mode {}", s.mode)));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds spectrum length {n}")));
    }
    let total: T = s.singular_values.iter().map(|&x| x * x).sum();
    if total == T::zero() {
        return Ok(if k == 0 { T::zero() } else { T::one() });
    }
    let head: T = s.singular_values[..k].iter().map(|&x| x * x).sum();
    Ok(head / total)
}

/// Truncated Tucker decomposition `T ≈ G ×_1 A^(1) ×_2 … ×_N A^(N)` from HOSVD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSet<T> {
    pub core: Tensor<T>,
    /// `A^(n)`, `I_n x J_n`, orthonormal sign-canonical columns.
    pub factors: Vec<Matrix<T>>,
    pub spectra: Vec<ModeSpectrum<T>>,
    /// Core contracted with the last (feature) factor: `G ×_N A^(N)`.
    pub w: Tensor<T>,
}

/// Named modes of the pose tensor, in their fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoseMode {
    Identity = 1,
    Yaw = 2,
    Pitch = 3,
    Roll = 4,
    Feature = 5,
}

impl PoseMode {
    pub const ALL: [PoseMode; 5] =
        [PoseMode::Identity, PoseMode::Yaw, PoseMode::Pitch, PoseMode::Roll, PoseMode::Feature];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl From<Axis> for PoseMode {
    fn from(a: Axis) -> Self {
        match a {
            Axis::Yaw => PoseMode::Yaw,
            Axis::Pitch => PoseMode::Pitch,
            Axis::Roll => PoseMode::Roll,
        }
    }
}

impl<T: Scalar> FactorSet<T> {
    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.core.dims().to_vec()
    }

    pub fn factor(&self, mode: PoseMode) -> &Matrix<T> {
        &self.factors[mode.index() - 1]
    }

    pub fn spectrum(&self, mode: PoseMode) -> &ModeSpectrum<T> {
        &self.spectra[mode.index() - 1]
    }

    /// Checks factor/core consistency and that `w` is the last-mode product.
    pub fn validate(&self) -> Result<()> {
        let ranks = self.core.dims();
        if self.factors.len() != ranks.len() || self.spectra.len() != ranks.len() {
            return shape_err("factor count does not match core order");
        }
        for (n, (f, &r)) in self.factors.iter().zip(ranks).enumerate() {
            if f.cols() != r {
                return shape_err(format!("factor {} has {} columns, core rank {r}", n + 1, f.cols()));
            }
        }
        let mut wdims = ranks.to_vec();
        *wdims.last_mut().unwrap() = self.factors.last().unwrap().rows();
        if self.w.dims() != wdims.as_slice() {
            return shape_err(format!("w dims {:?}, expected {wdims:?}", self.w.dims()));
        }
        Ok(())
    }
}

/// Higher-order SVD with per-mode truncation ranks.
///
/// Factor `n` holds the leading `ranks[n]` left singular vectors of the mode-`n`
/// unfolding, each column flipped so that its largest-magnitude entry is positive.
pub fn hosvd<T: Scalar>(t: &Tensor<T>, ranks: &[usize]) -> Result<FactorSet<T>> {
    if t.is_empty() {
        return Err(Error::Empty("tensor".into()));
    }
    if ranks.len() != t.order() {
        return shape_err(format!("{} ranks for an order-{} tensor", ranks.len(), t.order()));
    }
    for (n, (&r, &size)) in ranks.iter().zip(t.dims()).enumerate() {
        if r == 0 || r > size {
            return Err(Error::RankTooLarge { mode: n + 1, rank: r, size });
        }
    }
    let mut factors = Vec::with_capacity(t.order());
    let mut spectra = Vec::with_capacity(t.order());
    for (n, &r) in ranks.iter().enumerate() {
        let unfolding = t.unfold(n + 1)?;
        let (u, sigma) = left_singular(&unfolding);
        let mut a = u.leading_columns(r);
        canonicalize_signs(&mut a);
        factors.push(a);
        spectra.push(ModeSpectrum { mode: n + 1, singular_values: sigma });
    }
    let mut core = t.clone();
    for (n, a) in factors.iter().enumerate() {
        core = core.mode_product(&a.transpose(), n + 1)?;
    }
    let w = core.mode_product(factors.last().unwrap(), t.order())?;
    Ok(FactorSet { core, factors, spectra, w })
}

/// Flips each column so that its entry of largest magnitude (first on ties) is positive.
pub fn canonicalize_signs<T: Scalar>(a: &mut Matrix<T>) {
    for j in 0..a.cols() {
        let mut best = 0;
        for i in 1..a.rows() {
            if a[(i, j)].abs() > a[(best, j)].abs() {
                best = i;
            }
        }
        if a[(best, j)] < T::zero() {
            for i in 0..a.rows() {
                a[(i, j)] = -a[(i, j)];
            }
        }
    }
}

/// `G ×_1 A^(1) ×_2 … ×_N A^(N)`.
pub fn reconstruct<T: Scalar>(f: &FactorSet<T>) -> Result<Tensor<T>> {
    if f.factors.len() != f.core.order() {
        return shape_err("factor count does not match core order");
    }
    let mut t = f.core.clone();
    for (n, a) in f.factors.iter().enumerate() {
        t = t.mode_product(a, n + 1)?;
    }
    Ok(t)
}

/// Contracts `w` (dims `J_id x J_y x J_p x J_r x D_f`) with the three rotation
/// coefficient vectors, leaving the `D_f x J_id` matrix that maps identity
/// coefficients to features.
pub fn identity_basis<T: Scalar>(w: &Tensor<T>, a_y: &[T], a_p: &[T], a_r: &[T]) -> Result<Matrix<T>> {
    let d = w.dims();
    if d.len() != 5 {
        return shape_err(format!("w must be 5-way, got dims {d:?}"));
    }
    if a_y.len() != d[1] || a_p.len() != d[2] || a_r.len() != d[3] {
        return shape_err(format!(
            "coefficient lengths ({}, {}, {}) do not match w dims {d:?}",
            a_y.len(),
            a_p.len(),
            a_r.len()
        ));
    }
    let (j_id, d_f) = (d[0], d[4]);
    let mut weights = Vec::with_capacity(d[1] * d[2] * d[3]);
    for &r in a_r {
        for &p in a_p {
            for &y in a_y {
                weights.push(y * p * r);
            }
        }
    }
    let block = j_id * weights.len();
    let data = w.as_slice();
    let mut out = Matrix::zeros(d_f, j_id);
    for f in 0..d_f {
        let src = &data[f * block..(f + 1) * block];
        let row = out.row_mut(f);
        for (c, &wt) in weights.iter().enumerate() {
            axpy(wt, &src[c * j_id..(c + 1) * j_id], row);
        }
    }
    Ok(out)
}

/// Reconstructs a feature vector from one coefficient vector per non-feature mode.
pub fn reconstruct_sample<T: Scalar>(
    w: &Tensor<T>,
    a_id: &[T],
    a_y: &[T],
    a_p: &[T],
    a_r: &[T],
) -> Result<Vec<T>> {
    let basis = identity_basis(w, a_y, a_p, a_r)?;
    if a_id.len() != basis.cols() {
        return shape_err(format!("identity vector length {} vs {}", a_id.len(), basis.cols()));
    }
    basis.matvec(a_id)
}

/// Default ranks for a pose tensor: full identity and feature modes, `rotation_rank`
/// (capped by the mode size) for yaw, pitch and roll.
pub fn default_pose_ranks(dims: &[usize], rotation_rank: usize) -> Vec<usize> {
    dims.iter()
        .enumerate()
        .map(|(n, &d)| if (1..4).contains(&n) { rotation_rank.min(d) } else { d })
        .collect()
}
