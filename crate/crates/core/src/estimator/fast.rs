use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuralnet::{PoseModelBundle, PredictedLatents};
use crate::posegen::{Axis, EulerPose};
use crate::scalar::Scalar;

/// One pose prediction with what produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseEstimate<T> {
    /// Degrees, clamped to the trained ranges.
    pub pose: EulerPose<T>,
    /// Degrees, before clamping.
    pub unclamped: EulerPose<T>,
    pub out_of_range: bool,
    /// Encoder output (fast path) or the fitted curve values (oracle).
    pub latents: PredictedLatents<T>,
    /// Fitted identity coefficients (oracle only).
    pub identity: Option<Vec<T>>,
    /// Reconstruction error `‖x − x̂‖` (oracle only).
    pub residual: Option<T>,
    /// `false` when the oracle stopped at its iteration cap.
    pub converged: bool,
    /// Wall-clock seconds.
    pub elapsed: f64,
}

/// Clamps every angle into the bundle's ranges; returns the clamped pose and whether anything moved.
pub(crate) fn clamp_pose<T: Scalar>(
    raw: &EulerPose<T>,
    range: impl Fn(Axis) -> (T, T),
) -> (EulerPose<T>, bool) {
    let mut pose = *raw;
    let mut out = false;
    for axis in Axis::ALL {
        let (lo, hi) = range(axis);
        let v = raw.get(axis);
        if v < lo || v > hi {
            out = true;
            pose.set(axis, v.max(lo).min(hi));
        }
    }
    (pose, out)
}

/// Encoder → latent blocks → one head per axis.
///
/// `features` must already be normalized the way the training data was.
pub fn predict_fast<T: Scalar>(bundle: &PoseModelBundle<T>, features: &[T]) -> Result<PoseEstimate<T>> {
    let start = Instant::now();
    if features.len() != bundle.encoder.input_dim() {
        return Err(Error::Shape(format!(
            "feature length {} but the encoder expects {}",
            features.len(),
            bundle.encoder.input_dim()
        )));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("input features".into()));
    }
    let latent = bundle.encoder.forward(features)?;
    let latents = PredictedLatents::split(&latent, bundle.latent_dims)?;
    let mut raw = EulerPose::default();
    for axis in Axis::ALL {
        let angle = bundle.head(axis).forward(latents.axis(axis))?[0];
        if !angle.is_finite() {
            return Err(Error::NonFinite(format!("{axis} head output")));
        }
        raw.set(axis, angle);
    }
    let (pose, out_of_range) = clamp_pose(&raw, |a| {
        let r = bundle.grid.range(a);
        (T::lit(r.min), T::lit(r.max))
    });
    Ok(PoseEstimate {
        pose,
        unclamped: raw,
        out_of_range,
        latents,
        identity: None,
        residual: None,
        converged: true,
        elapsed: start.elapsed().as_secs_f64(),
    })
}
