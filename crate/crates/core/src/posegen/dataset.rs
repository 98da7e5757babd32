use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{normalize_landmarks, rotate_shape, Axis, EulerPose, LandmarkSet};
use crate::error::{Error, Result};
use crate::multilinear::{increment, Tensor};
use crate::scalar::Scalar;

/// Closed angle interval in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleRange {
    pub min: f64,
    pub max: f64,
}

impl AngleRange {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }
}

/// Angle ranges per axis plus the grid step, all in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub yaw: AngleRange,
    pub pitch: AngleRange,
    pub roll: AngleRange,
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            yaw: AngleRange::new(-50.0, 50.0),
            pitch: AngleRange::new(-40.0, 40.0),
            roll: AngleRange::new(-30.0, 30.0),
            step: 10.0,
        }
    }
}

impl GridSpec {
    pub fn range(&self, axis: Axis) -> AngleRange {
        match axis {
            Axis::Yaw => self.yaw,
            Axis::Pitch => self.pitch,
            Axis::Roll => self.roll,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidArgument(format!("grid step must be positive, got {}", self.step)));
        }
        for axis in Axis::ALL {
            let r = self.range(axis);
            if !(r.min.is_finite() && r.max.is_finite()) || r.max < r.min {
                return Err(Error::InvalidArgument(format!("{axis} range [{}, {}]", r.min, r.max)));
            }
            let cells = r.span() / self.step;
            if (cells - cells.round()).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "{axis} range [{}, {}] is not a multiple of step {}",
                    r.min, r.max, self.step
                )));
            }
        }
        Ok(())
    }
}

/// Bin centers per axis (strictly increasing, uniform).
#[derive(Debug, Clone, PartialEq)]
pub struct PoseGrid<T> {
    pub yaw_bins: Vec<T>,
    pub pitch_bins: Vec<T>,
    pub roll_bins: Vec<T>,
}

/// Tolerance in degrees when matching a label to a bin center.
const BIN_TOL: f64 = 1e-6;

impl<T: Scalar> PoseGrid<T> {
    pub fn from_spec(spec: &GridSpec) -> Result<Self> {
        spec.validate()?;
        let bins = |r: AngleRange| {
            let n = (r.span() / spec.step).round() as usize + 1;
            (0..n).map(|k| T::lit(r.min + k as f64 * spec.step)).collect::<Vec<T>>()
        };
        Ok(Self { yaw_bins: bins(spec.yaw), pitch_bins: bins(spec.pitch), roll_bins: bins(spec.roll) })
    }

    pub fn bins(&self, axis: Axis) -> &[T] {
        match axis {
            Axis::Yaw => &self.yaw_bins,
            Axis::Pitch => &self.pitch_bins,
            Axis::Roll => &self.roll_bins,
        }
    }

    /// `(D_y, D_p, D_r)`.
    pub fn sizes(&self) -> [usize; 3] {
        [self.yaw_bins.len(), self.pitch_bins.len(), self.roll_bins.len()]
    }

    pub fn cell_count(&self) -> usize {
        self.sizes().iter().product()
    }

    pub fn bin_index(&self, axis: Axis, angle: T) -> Option<usize> {
        self.bins(axis).iter().position(|&b| (b - angle).abs() <= T::lit(BIN_TOL))
    }

    pub fn cell_of(&self, pose: &EulerPose<T>) -> Option<[usize; 3]> {
        Some([
            self.bin_index(Axis::Yaw, pose.yaw)?,
            self.bin_index(Axis::Pitch, pose.pitch)?,
            self.bin_index(Axis::Roll, pose.roll)?,
        ])
    }

    pub fn pose_at(&self, cell: [usize; 3]) -> EulerPose<T> {
        EulerPose::new(self.yaw_bins[cell[0]], self.pitch_bins[cell[1]], self.roll_bins[cell[2]])
    }
}

/// One labelled feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample<T> {
    pub id: i64,
    pub pose: EulerPose<T>,
    pub features: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoseDataset<T> {
    pub samples: Vec<Sample<T>>,
}

impl<T: Scalar> PoseDataset<T> {
    pub fn new(samples: Vec<Sample<T>>) -> Result<Self> {
        let d = Self { samples };
        d.check_feature_dim()?;
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `D_f`, or 0 for an empty set.
    pub fn feature_dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.features.len())
    }

    fn check_feature_dim(&self) -> Result<()> {
        let d = self.feature_dim();
        if let Some(bad) = self.samples.iter().find(|s| s.features.len() != d) {
            return Err(Error::Shape(format!(
                "sample of identity {} has {} features, expected {d}",
                bad.id,
                bad.features.len()
            )));
        }
        Ok(())
    }

    /// Distinct identity ids, ascending.
    pub fn identity_ids(&self) -> Vec<i64> {
        self.samples.iter().map(|s| s.id).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn filter_ids(&self, ids: &BTreeSet<i64>) -> Self {
        Self { samples: self.samples.iter().filter(|s| ids.contains(&s.id)).cloned().collect() }
    }
}

/// Rotates a base shape and normalizes the result into a flat feature vector.
pub fn render_sample<T: Scalar>(shape: &LandmarkSet<T>, pose: &EulerPose<T>) -> Result<Vec<T>> {
    Ok(normalize_landmarks(&rotate_shape(shape, pose))?.flatten())
}

/// One sample per identity and grid cell, identity-major then yaw, pitch, roll.
/// Identity `k` gets id `k`.
pub fn generate_dataset<T: Scalar>(shapes: &[LandmarkSet<T>], grid: &PoseGrid<T>) -> Result<PoseDataset<T>> {
    if shapes.is_empty() || grid.cell_count() == 0 {
        return Err(Error::Empty("shapes or grid".into()));
    }
    let mut samples = Vec::with_capacity(shapes.len() * grid.cell_count());
    for (k, shape) in shapes.iter().enumerate() {
        for &yaw in &grid.yaw_bins {
            for &pitch in &grid.pitch_bins {
                for &roll in &grid.roll_bins {
                    let pose = EulerPose::new(yaw, pitch, roll);
                    samples.push(Sample { id: k as i64, pose, features: render_sample(shape, &pose)? });
                }
            }
        }
    }
    PoseDataset::new(samples)
}

/// Uniformly random poses inside the grid ranges.
pub fn random_poses<T: Scalar>(n: usize, spec: &GridSpec, seed: u64) -> Vec<EulerPose<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut draw = |r: AngleRange| T::lit(rng.random_range(r.min..=r.max));
            let yaw = draw(spec.yaw);
            let pitch = draw(spec.pitch);
            let roll = draw(spec.roll);
            EulerPose::new(yaw, pitch, roll)
        })
        .collect()
}

/// Renders `(identity index, pose)` pairs; identity `k` gets id `k`.
pub fn generate_at_poses<T: Scalar>(
    shapes: &[LandmarkSet<T>],
    requests: &[(usize, EulerPose<T>)],
) -> Result<PoseDataset<T>> {
    let samples = requests
        .iter()
        .map(|&(k, pose)| {
            let shape = shapes
                .get(k)
                .ok_or_else(|| Error::InvalidArgument(format!("identity index {k} out of range")))?;
            Ok(Sample { id: k as i64, pose, features: render_sample(shape, &pose)? })
        })
        .collect::<Result<Vec<_>>>()?;
    PoseDataset::new(samples)
}

/// Fills `T[id, i_y, i_p, i_r, :]` from a pose-consistent dataset. Identities take
/// tensor positions in ascending id order.
pub fn populate_tensor<T: Scalar>(d: &PoseDataset<T>, grid: &PoseGrid<T>) -> Result<Tensor<T>> {
    if d.is_empty() {
        return Err(Error::Empty("dataset".into()));
    }
    d.check_feature_dim()?;
    let ids = d.identity_ids();
    let pos: BTreeMap<i64, usize> = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
    let [dy, dp, dr] = grid.sizes();
    let d_f = d.feature_dim();
    let dims = [ids.len(), dy, dp, dr, d_f];
    let mut t = Tensor::zeros(&dims);
    let mut filled = vec![false; ids.len() * dy * dp * dr];
    let stride_f: usize = dims[..4].iter().product();
    for s in &d.samples {
        let cell = grid.cell_of(&s.pose).ok_or_else(|| {
            Error::OffGrid(format!(
                "identity {} at ({}, {}, {})",
                s.id, s.pose.yaw, s.pose.pitch, s.pose.roll
            ))
        })?;
        let k = pos[&s.id];
        let lin = k + ids.len() * (cell[0] + dy * (cell[1] + dp * cell[2]));
        if filled[lin] {
            return Err(Error::DuplicateCell {
                id: s.id,
                yaw: s.pose.yaw.as_f64(),
                pitch: s.pose.pitch.as_f64(),
                roll: s.pose.roll.as_f64(),
            });
        }
        filled[lin] = true;
        let data = t.as_mut_slice();
        for (f, &v) in s.features.iter().enumerate() {
            data[lin + f * stride_f] = v;
        }
    }
    let cell_dims = [ids.len(), dy, dp, dr];
    let mut idx = [0usize; 4];
    for &ok in &filled {
        if !ok {
            let pose = grid.pose_at([idx[1], idx[2], idx[3]]);
            return Err(Error::MissingCell {
                id: ids[idx[0]],
                yaw: pose.yaw.as_f64(),
                pitch: pose.pitch.as_f64(),
                roll: pose.roll.as_f64(),
            });
        }
        increment(&mut idx, &cell_dims);
    }
    if let Some(pos) = t.as_slice().iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("tensor entry {pos}")));
    }
    Ok(t)
}

/// Inverse of [`populate_tensor`] given the identity ids in tensor order.
pub fn tensor_to_dataset<T: Scalar>(t: &Tensor<T>, grid: &PoseGrid<T>, ids: &[i64]) -> Result<PoseDataset<T>> {
    let dims = t.dims();
    if dims.len() != 5 || dims[0] != ids.len() || dims[1..4] != grid.sizes() {
        return Err(Error::Shape(format!("tensor dims {dims:?} vs grid {:?} and {} ids", grid.sizes(), ids.len())));
    }
    let mut samples = Vec::with_capacity(dims[..4].iter().product());
    for (k, &id) in ids.iter().enumerate() {
        for iy in 0..dims[1] {
            for ip in 0..dims[2] {
                for ir in 0..dims[3] {
                    let features = (0..dims[4]).map(|f| t.get(&[k, iy, ip, ir, f])).collect();
                    samples.push(Sample { id, pose: grid.pose_at([iy, ip, ir]), features });
                }
            }
        }
    }
    PoseDataset::new(samples)
}

/// Splits by identity: a seeded shuffle of the distinct ids, the first
/// `round(train_fraction · N_id)` of which form the training side.
pub fn split_dataset<T: Scalar>(
    d: &PoseDataset<T>,
    train_fraction: f64,
    seed: u64,
) -> Result<(PoseDataset<T>, PoseDataset<T>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("train fraction {train_fraction} not in (0, 1)")));
    }
    let (train_ids, test_ids) = split_ids(&d.identity_ids(), train_fraction, seed)?;
    Ok((d.filter_ids(&train_ids), d.filter_ids(&test_ids)))
}

pub fn split_ids(ids: &[i64], train_fraction: f64, seed: u64) -> Result<(BTreeSet<i64>, BTreeSet<i64>)> {
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (train_fraction * ids.len() as f64).round() as usize;
    if n_train == 0 || n_train >= ids.len() {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} leaves an empty side with {} identities",
            ids.len()
        )));
    }
    Ok((shuffled[..n_train].iter().copied().collect(), shuffled[n_train..].iter().copied().collect()))
}
