use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posegen::{euler_to_matrix, EulerPose};
use crate::scalar::{rad2deg, Scalar};

/// Mean absolute Euler-angle errors, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaeSummary {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub mean: f64,
}

/// Mean angular errors between matching rotation-matrix columns, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaevSummary {
    pub left: f64,
    pub down: f64,
    pub front: f64,
    pub mean: f64,
}

fn check_pair<T>(preds: &[T], gts: &[T]) -> Result<()> {
    if preds.len() != gts.len() {
        return Err(Error::Shape(format!("{} predictions for {} ground truths", preds.len(), gts.len())));
    }
    if preds.is_empty() {
        return Err(Error::Empty("pose lists".into()));
    }
    Ok(())
}

/// Plain absolute differences (no wrap-around; all ranges lie inside ±90°).
pub fn mae<T: Scalar>(preds: &[EulerPose<T>], gts: &[EulerPose<T>]) -> Result<MaeSummary> {
    check_pair(preds, gts)?;
    let mut acc = [0.0f64; 3];
    for (p, g) in preds.iter().zip(gts) {
        let (p, g) = (p.to_array(), g.to_array());
        for k in 0..3 {
            acc[k] += (p[k] - g[k]).abs().as_f64();
        }
    }
    let n = preds.len() as f64;
    let [yaw, pitch, roll] = acc.map(|a| a / n);
    Ok(MaeSummary { yaw, pitch, roll, mean: (yaw + pitch + roll) / 3.0 })
}

/// Angle between column `k` of the two rotation matrices, degrees.
///
/// Computed as `atan2(|a×b|, a·b)`: the same angle as the arccosine of the
/// clamped dot product, but exact for identical columns and well conditioned
/// for small errors.
pub fn column_errors<T: Scalar>(pred: &EulerPose<T>, gt: &EulerPose<T>) -> [f64; 3] {
    let (a, b) = (euler_to_matrix(pred), euler_to_matrix(gt));
    [0, 1, 2].map(|k| {
        let (u, v) = ([a[0][k], a[1][k], a[2][k]], [b[0][k], b[1][k], b[2][k]]);
        let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        let cross = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
        let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        rad2deg(sin.atan2(dot)).as_f64()
    })
}

/// Per-column angular error over the left, down and front axes of the head frame.
pub fn maev<T: Scalar>(preds: &[EulerPose<T>], gts: &[EulerPose<T>]) -> Result<MaevSummary> {
    check_pair(preds, gts)?;
    let mut acc = [0.0f64; 3];
    for (p, g) in preds.iter().zip(gts) {
        for (a, e) in acc.iter_mut().zip(column_errors(p, g)) {
            *a += e;
        }
    }
    let n = preds.len() as f64;
    let [left, down, front] = acc.map(|a| a / n);
    Ok(MaevSummary { left, down, front, mean: (left + down + front) / 3.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_yaw_error() {
        let p = [EulerPose::new(10.0f64, 0.0, 0.0)];
        let g = [EulerPose::new(0.0f64, 0.0, 0.0)];
        let m = mae(&p, &g).unwrap();
        assert_eq!((m.yaw, m.pitch, m.roll), (10.0, 0.0, 0.0));
        assert!((m.mean - 10.0 / 3.0).abs() < 1e-15);
        let v = maev(&p, &g).unwrap();
        assert!((v.left - 10.0).abs() < 1e-9 && v.down.abs() < 1e-9 && (v.front - 10.0).abs() < 1e-9);
        assert!((v.mean - 20.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn length_checks() {
        let p = [EulerPose::new(1.0f64, 0.0, 0.0)];
        assert!(mae(&p, &[]).is_err());
        assert!(maev::<f64>(&[], &[]).is_err());
    }
}
