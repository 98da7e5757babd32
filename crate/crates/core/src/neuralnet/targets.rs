use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::manifold::{FineFactorTable, SinusoidalParams};
use crate::multilinear::{FactorSet, PoseMode};
use crate::posegen::{Axis, PoseDataset, PoseGrid};
use crate::scalar::Scalar;

/// Encoder output split into per-axis coefficient vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedLatents<T> {
    pub yaw: Vec<T>,
    pub pitch: Vec<T>,
    pub roll: Vec<T>,
}

impl<T: Scalar> PredictedLatents<T> {
    /// Splits a latent vector into consecutive blocks of the given lengths.
    pub fn split(latent: &[T], dims: [usize; 3]) -> Result<Self> {
        if latent.len() != dims.iter().sum::<usize>() {
            return Err(Error::Shape(format!("latent length {} for blocks {dims:?}", latent.len())));
        }
        if latent.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("encoder output".into()));
        }
        let (y, rest) = latent.split_at(dims[0]);
        let (p, r) = rest.split_at(dims[1]);
        Ok(Self { yaw: y.to_vec(), pitch: p.to_vec(), roll: r.to_vec() })
    }

    pub fn axis(&self, axis: Axis) -> &[T] {
        match axis {
            Axis::Yaw => &self.yaw,
            Axis::Pitch => &self.pitch,
            Axis::Roll => &self.roll,
        }
    }
}

/// Where encoder ground truth comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TargetSource {
    /// Rows of the decomposition's rotation factor matrices.
    #[default]
    Raw,
    /// Fitted cosine curves evaluated at the bin centers.
    Smoothed,
}

/// One 9-vector per sample: yaw factor row, pitch factor row, roll factor row of
/// the sample's grid cell. `smoothed` replaces the raw rows by curve values.
pub fn encoder_targets<T: Scalar>(
    fs: &FactorSet<T>,
    dataset: &PoseDataset<T>,
    grid: &PoseGrid<T>,
    smoothed: Option<&SinusoidalParams<T>>,
) -> Result<Matrix<T>> {
    let factors = Axis::ALL.map(|a| fs.factor(PoseMode::from(a)));
    for (a, f) in Axis::ALL.iter().zip(&factors) {
        if f.rows() != grid.bins(*a).len() {
            return Err(Error::Shape(format!(
                "{a} factor has {} rows, grid has {} bins",
                f.rows(),
                grid.bins(*a).len()
            )));
        }
    }
    let width: usize = factors.iter().map(|f| f.cols()).sum();
    let mut out = Matrix::zeros(dataset.len(), width);
    for (i, s) in dataset.samples.iter().enumerate() {
        let cell = grid.cell_of(&s.pose).ok_or_else(|| {
            Error::OffGrid(format!(
                "sample {i} (id {}) at ({}, {}, {})",
                s.id, s.pose.yaw, s.pose.pitch, s.pose.roll
            ))
        })?;
        let row = out.row_mut(i);
        let mut off = 0;
        for (k, axis) in Axis::ALL.into_iter().enumerate() {
            let d = factors[k].cols();
            match smoothed {
                None => row[off..off + d].copy_from_slice(factors[k].row(cell[k])),
                Some(p) => {
                    let fit = p.axis(axis);
                    if fit.dim() != d {
                        return Err(Error::Shape(format!("{axis} curves have {} dims, factor {d}", fit.dim())));
                    }
                    fit.eval_into(grid.bins(axis)[cell[k]], &mut row[off..off + d]);
                }
            }
            off += d;
        }
    }
    Ok(out)
}

/// Head supervision from a fine table: inputs are the table rows, targets the angles.
pub fn head_training_set<T: Scalar>(table: &FineFactorTable<T>) -> Result<(Matrix<T>, Matrix<T>)> {
    if table.is_empty() {
        return Err(Error::Empty("fine factor table".into()));
    }
    let targets = Matrix::from_fn(table.len(), 1, |i, _| table.angle(i));
    Ok((table.rows.clone(), targets))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_in_threes() {
        let v: Vec<f64> = (0..9).map(f64::from).collect();
        let l = PredictedLatents::split(&v, [3, 3, 3]).unwrap();
        assert_eq!(l.pitch, vec![3.0, 4.0, 5.0]);
        assert_eq!(l.axis(Axis::Roll), &[6.0, 7.0, 8.0]);
        assert!(PredictedLatents::split(&v, [3, 3, 2]).is_err());
    }
}
