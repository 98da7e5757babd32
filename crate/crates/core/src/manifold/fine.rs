use serde::{Deserialize, Serialize};

use super::params::AxisFit;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::posegen::{AngleRange, Axis};
use crate::scalar::Scalar;

/// Densely sampled fitted curves for one axis: row `i` is `(f_1(ω_i), …, f_D(ω_i))`
/// with `ω_i = angle_min + i·step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineFactorTable<T> {
    pub axis: Axis,
    pub angle_min: T,
    pub angle_max: T,
    pub step: T,
    pub rows: Matrix<T>,
}

impl<T: Scalar> FineFactorTable<T> {
    pub fn len(&self) -> usize {
        self.rows.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.rows() == 0
    }

    pub fn angle(&self, i: usize) -> T {
        T::lit(self.angle_min.as_f64() + i as f64 * self.step.as_f64())
    }

    pub fn angles(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.angle(i)).collect()
    }
}

/// Number of sample angles `floor((max − min)/step) + 1`, tolerant of rounding
/// when the span is an exact multiple of the step.
pub fn fine_row_count(range: &AngleRange, step: f64) -> usize {
    let ratio = range.span() / step;
    (ratio + 1e-9).floor() as usize + 1
}

/// Evaluates an axis' fitted curves on a regular angle lattice over `range`.
pub fn gen_fine_factors<T: Scalar>(fit: &AxisFit<T>, range: AngleRange, step: f64) -> Result<FineFactorTable<T>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidArgument(format!("fine step must be positive, got {step}")));
    }
    if !(range.max > range.min) {
        return Err(Error::InvalidArgument(format!("empty angle range [{}, {}]", range.min, range.max)));
    }
    if step > range.max - range.min {
        return Err(Error::InvalidArgument(format!(
            "step {step} exceeds range [{}, {}]",
            range.min, range.max
        )));
    }
    let (lo, hi) = (fit.angle_min().as_f64(), fit.angle_max().as_f64());
    if range.min < lo - 1e-9 || range.max > hi + 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "range [{}, {}] leaves the fitted {} range [{}, {}]",
            range.min,
            range.max,
            fit.axis, lo, hi
        )));
    }
    let n = fine_row_count(&range, step);
    let d = fit.dim();
    let mut rows = Matrix::zeros(n, d);
    for i in 0..n {
        let angle = T::lit(range.min + i as f64 * step);
        fit.eval_into(angle, rows.row_mut(i));
    }
    Ok(FineFactorTable {
        axis: fit.axis,
        angle_min: T::lit(range.min),
        angle_max: T::lit(range.max),
        step: T::lit(step),
        rows,
    })
}
