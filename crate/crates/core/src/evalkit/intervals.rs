use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posegen::{AngleRange, Axis, EulerPose, GridSpec};
use crate::scalar::Scalar;

/// Number of bins per axis used for the per-interval breakdown.
pub const DEFAULT_INTERVAL_BINS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `None` for an empty bin.
    pub mae: Option<f64>,
}

/// Errors of one axis grouped by the ground-truth angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalTable {
    pub axis: Axis,
    pub range: AngleRange,
    pub bins: Vec<IntervalBin>,
}

impl IntervalTable {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    /// Count-weighted mean of the bin errors, i.e. the overall axis MAE.
    pub fn weighted_mae(&self) -> Option<f64> {
        let n = self.total();
        (n > 0).then(|| self.bins.iter().filter_map(|b| b.mae.map(|m| m * b.count as f64)).sum::<f64>() / n as f64)
    }
}

/// Index of the bin holding `v`: bins are left-closed, the last one also right-closed.
pub fn bin_of(range: &AngleRange, n_bins: usize, v: f64) -> Option<usize> {
    if !range.contains(v) {
        return None;
    }
    let width = range.span() / n_bins as f64;
    Some((((v - range.min) / width).floor() as usize).min(n_bins - 1))
}

/// Per-bin absolute error of `axis`, binning samples by their true angle over `range`.
pub fn interval_errors<T: Scalar>(
    preds: &[EulerPose<T>],
    gts: &[EulerPose<T>],
    axis: Axis,
    range: AngleRange,
    n_bins: usize,
) -> Result<IntervalTable> {
    if preds.len() != gts.len() {
        return Err(Error::Shape(format!("{} predictions for {} ground truths", preds.len(), gts.len())));
    }
    if n_bins == 0 || !(range.max > range.min) {
        return Err(Error::InvalidArgument(format!("{n_bins} bins over [{}, {}]", range.min, range.max)));
    }
    let mut sums = vec![0.0f64; n_bins];
    let mut counts = vec![0usize; n_bins];
    for (i, (p, g)) in preds.iter().zip(gts).enumerate() {
        let truth = g.get(axis).as_f64();
        let b = bin_of(&range, n_bins, truth).ok_or_else(|| {
            Error::OffGrid(format!("sample {i}: {axis} {truth} outside [{}, {}]", range.min, range.max))
        })?;
        sums[b] += (p.get(axis).as_f64() - truth).abs();
        counts[b] += 1;
    }
    let width = range.span() / n_bins as f64;
    let bins = (0..n_bins)
        .map(|k| IntervalBin {
            lo: range.min + k as f64 * width,
            hi: if k + 1 == n_bins { range.max } else { range.min + (k + 1) as f64 * width },
            count: counts[k],
            mae: (counts[k] > 0).then(|| sums[k] / counts[k] as f64),
        })
        .collect();
    Ok(IntervalTable { axis, range, bins })
}

/// One table per axis over the grid's ranges with the default bin count.
pub fn default_interval_tables<T: Scalar>(
    preds: &[EulerPose<T>],
    gts: &[EulerPose<T>],
    grid: &GridSpec,
) -> Result<Vec<IntervalTable>> {
    Axis::ALL
        .into_iter()
        .map(|a| interval_errors(preds, gts, a, grid.range(a), DEFAULT_INTERVAL_BINS))
        .collect()
}
