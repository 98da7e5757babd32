use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{deg2rad, Scalar};

/// Rotation axis of the pose model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// About the vertical (y) axis.
    Yaw,
    /// About the lateral (x) axis.
    Pitch,
    /// About the longitudinal (z) axis, pointing toward the camera.
    Roll,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Yaw, Axis::Pitch, Axis::Roll];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Yaw => "yaw",
            Axis::Pitch => "pitch",
            Axis::Roll => "roll",
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Head orientation in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerPose<T> {
    pub yaw: T,
    pub pitch: T,
    pub roll: T,
}

impl<T: Scalar> EulerPose<T> {
    pub fn new(yaw: T, pitch: T, roll: T) -> Self {
        Self { yaw, pitch, roll }
    }

    pub fn get(&self, axis: Axis) -> T {
        match axis {
            Axis::Yaw => self.yaw,
            Axis::Pitch => self.pitch,
            Axis::Roll => self.roll,
        }
    }

    pub fn set(&mut self, axis: Axis, v: T) {
        match axis {
            Axis::Yaw => self.yaw = v,
            Axis::Pitch => self.pitch = v,
            Axis::Roll => self.roll = v,
        }
    }

    pub fn to_array(&self) -> [T; 3] {
        [self.yaw, self.pitch, self.roll]
    }

    pub fn is_finite(&self) -> bool {
        self.yaw.is_finite() && self.pitch.is_finite() && self.roll.is_finite()
    }
}

/// 3x3 matrix, `m[row][col]`.
pub type Mat3<T> = [[T; 3]; 3];

fn matmul3<T: Scalar>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn transpose3<T: Scalar>(m: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[j][i];
        }
    }
    out
}

pub fn det3<T: Scalar>(m: &Mat3<T>) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn apply3<T: Scalar>(m: &Mat3<T>, p: &[T; 3]) -> [T; 3] {
    [
        m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2],
        m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2],
        m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2],
    ]
}

/// `R = R_y(yaw) · R_x(pitch) · R_z(roll)`: y vertical, x lateral, z toward the camera.
pub fn euler_to_matrix<T: Scalar>(p: &EulerPose<T>) -> Mat3<T> {
    let (o, z) = (T::one(), T::zero());
    let (sy, cy) = deg2rad(p.yaw).sin_cos();
    let (sp, cp) = deg2rad(p.pitch).sin_cos();
    let (sr, cr) = deg2rad(p.roll).sin_cos();
    let ry = [[cy, z, sy], [z, o, z], [-sy, z, cy]];
    let rx = [[o, z, z], [z, cp, -sp], [z, sp, cp]];
    let rz = [[cr, -sr, z], [sr, cr, z], [z, z, o]];
    matmul3(&ry, &matmul3(&rx, &rz))
}

/// Ordered 3D landmarks.
///
/// `centroid` and `scale` record the similarity removed by [`normalize_landmarks`]
/// (`(0,0,0)` and `1` for raw sets), so `raw_i = scale · point_i + centroid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSet<T> {
    pub points: Vec<[T; 3]>,
    pub centroid: [T; 3],
    pub scale: T,
}

impl<T: Scalar> LandmarkSet<T> {
    pub fn new(points: Vec<[T; 3]>) -> Self {
        Self { points, centroid: [T::zero(); 3], scale: T::one() }
    }

    /// Parses `x0 y0 z0 x1 y1 z1 …`.
    pub fn from_flat(flat: &[T]) -> Result<Self> {
        if !flat.len().is_multiple_of(3) || flat.is_empty() {
            return Err(Error::Shape(format!("{} values is not a list of 3D points", flat.len())));
        }
        Ok(Self::new(flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()))
    }

    /// Flattens with `(x, y, z)` interleaved in landmark order.
    pub fn flatten(&self) -> Vec<T> {
        self.points.iter().flat_map(|p| p.iter().copied()).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean(&self) -> [T; 3] {
        let n = T::from_usize_lossy(self.points.len());
        let mut c = [T::zero(); 3];
        for p in &self.points {
            for k in 0..3 {
                c[k] += p[k];
            }
        }
        c.map(|v| v / n)
    }

    /// Root-mean-square distance of the points to `center`.
    pub fn rms_radius(&self, center: &[T; 3]) -> T {
        let n = T::from_usize_lossy(self.points.len());
        let ss: T = self
            .points
            .iter()
            .map(|p| (0..3).map(|k| (p[k] - center[k]) * (p[k] - center[k])).sum::<T>())
            .sum();
        (ss / n).sqrt()
    }
}

/// Removes translation and scale: subtract the centroid `C`, divide by
/// `s = sqrt(mean_i ‖L_i − C‖²)`.
pub fn normalize_landmarks<T: Scalar>(shape: &LandmarkSet<T>) -> Result<LandmarkSet<T>> {
    if shape.points.is_empty() {
        return Err(Error::Empty("landmark set".into()));
    }
    if shape.points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("landmark coordinate".into()));
    }
    let c = shape.mean();
    let s = shape.rms_radius(&c);
    if !(s > T::zero()) || !s.is_finite() {
        return Err(Error::Degenerate("all landmarks coincide (zero scale)".into()));
    }
    let points = shape.points.iter().map(|p| [(p[0] - c[0]) / s, (p[1] - c[1]) / s, (p[2] - c[2]) / s]).collect();
    Ok(LandmarkSet { points, centroid: c, scale: s })
}

/// Rotates every landmark by `euler_to_matrix(p)` about the origin.
pub fn rotate_shape<T: Scalar>(shape: &LandmarkSet<T>, p: &EulerPose<T>) -> LandmarkSet<T> {
    rotate_by(shape, &euler_to_matrix(p))
}

pub fn rotate_by<T: Scalar>(shape: &LandmarkSet<T>, r: &Mat3<T>) -> LandmarkSet<T> {
    LandmarkSet {
        points: shape.points.iter().map(|q| apply3(r, q)).collect(),
        centroid: shape.centroid,
        scale: shape.scale,
    }
}
