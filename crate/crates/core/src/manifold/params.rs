use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posegen::Axis;
use crate::scalar::{deg2rad, wrap_pi, Scalar};

/// One cosine curve `f(ω) = α·cos(β·ω + γ) + φ` with `ω` in degrees and `β` in
/// radians per degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosineParams<T> {
    pub amplitude: T,
    pub frequency: T,
    pub phase: T,
    pub offset: T,
}

impl<T: Scalar> CosineParams<T> {
    pub fn new(amplitude: T, frequency: T, phase: T, offset: T) -> Self {
        Self { amplitude, frequency, phase, offset }
    }

    /// Placeholder for a constant curve: `α = 0`, `β = π/180`, `γ = 0`.
    pub fn constant(offset: T) -> Self {
        Self::new(T::zero(), deg2rad(T::one()), T::zero(), offset)
    }

    pub fn eval(&self, angle_deg: T) -> T {
        self.amplitude * (self.frequency * angle_deg + self.phase).cos() + self.offset
    }

    pub fn as_array(&self) -> [T; 4] {
        [self.amplitude, self.frequency, self.phase, self.offset]
    }

    pub fn from_array(p: [T; 4]) -> Self {
        Self::new(p[0], p[1], p[2], p[3])
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|x| x.is_finite())
    }

    /// Normal form `α ≥ 0`, `β ≥ 0`, `γ ∈ [−π, π)`; the curve is unchanged.
    pub fn canonical(&self) -> Self {
        let (mut a, mut b, mut g) = (self.amplitude, self.frequency, self.phase);
        if b < T::zero() {
            b = -b;
            g = -g;
        }
        if a < T::zero() {
            a = -a;
            g += T::PI();
        }
        Self::new(a, b, wrap_pi(g), self.offset)
    }
}

/// Fitted curve for one factor column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionFit<T> {
    pub params: CosineParams<T>,
    pub residual_rms: T,
    /// Constant column: frequency and phase are placeholders.
    pub degenerate: bool,
    /// `false` when the iteration cap was hit; `params` are then the best found.
    pub converged: bool,
    pub iterations: usize,
}

/// Curves for every retained dimension of one rotation axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisFit<T> {
    pub axis: Axis,
    /// Bin centers the curves were fitted on, degrees.
    pub angles: Vec<T>,
    pub dims: Vec<DimensionFit<T>>,
}

impl<T: Scalar> AxisFit<T> {
    /// `(f_1(ω), …, f_D(ω))`.
    pub fn eval(&self, angle_deg: T) -> Vec<T> {
        self.dims.iter().map(|d| d.params.eval(angle_deg)).collect()
    }

    pub fn eval_into(&self, angle_deg: T, out: &mut [T]) {
        for (o, d) in out.iter_mut().zip(&self.dims) {
            *o = d.params.eval(angle_deg);
        }
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn angle_min(&self) -> T {
        self.angles.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn angle_max(&self) -> T {
        self.angles.iter().copied().fold(T::neg_infinity(), T::max)
    }
}

/// Cosine models of the yaw, pitch and roll subspaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinusoidalParams<T> {
    pub yaw: AxisFit<T>,
    pub pitch: AxisFit<T>,
    pub roll: AxisFit<T>,
}

impl<T: Scalar> SinusoidalParams<T> {
    pub fn axis(&self, axis: Axis) -> &AxisFit<T> {
        match axis {
            Axis::Yaw => &self.yaw,
            Axis::Pitch => &self.pitch,
            Axis::Roll => &self.roll,
        }
    }
}

pub const PARAMS_FORMAT: &str = "rotman-sinusoidal";
pub const PARAMS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ParamsDocument<T> {
    format: String,
    version: u32,
    axes: Vec<AxisFit<T>>,
}

/// Pretty-printed JSON listing, per axis and dimension, the curve parameters,
/// residual RMS, degeneracy flag and the fitting grid.
pub fn params_to_json<T: Scalar>(p: &SinusoidalParams<T>) -> Result<String> {
    let doc = ParamsDocument {
        format: PARAMS_FORMAT.into(),
        version: PARAMS_VERSION,
        axes: vec![p.yaw.clone(), p.pitch.clone(), p.roll.clone()],
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn params_from_json<T: Scalar>(s: &str) -> Result<SinusoidalParams<T>> {
    let doc: ParamsDocument<T> = serde_json::from_str(s).map_err(|e| Error::Format(format!("params: {e}")))?;
    if doc.format != PARAMS_FORMAT || doc.version != PARAMS_VERSION {
        return Err(Error::Format(format!("unexpected params document {} v{}", doc.format, doc.version)));
    }
    let mut axes = doc.axes.into_iter();
    let (Some(yaw), Some(pitch), Some(roll), None) = (axes.next(), axes.next(), axes.next(), axes.next()) else {
        return Err(Error::Format("params document must list yaw, pitch and roll".into()));
    };
    if (yaw.axis, pitch.axis, roll.axis) != (Axis::Yaw, Axis::Pitch, Axis::Roll) {
        return Err(Error::Format("axes out of order".into()));
    }
    Ok(SinusoidalParams { yaw, pitch, roll })
}
