use serde::{Deserialize, Serialize};

use super::net::{DenseNet, NetRole};
use crate::error::{Error, Result};
use crate::posegen::{Axis, GridSpec};
use crate::scalar::Scalar;

pub const MODEL_FORMAT: &str = "rotman-model";
pub const BUNDLE_FORMAT: &str = "rotman-bundle";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDoc<T> {
    format: String,
    version: u32,
    input_dim: usize,
    output_dim: usize,
    net: DenseNet<T>,
}

fn check_header(format: &str, version: u32, want: &str) -> Result<()> {
    if format != want || version != VERSION {
        return Err(Error::Format(format!("expected {want} v{VERSION}, found {format} v{version}")));
    }
    Ok(())
}

pub fn model_to_json<T: Scalar>(net: &DenseNet<T>) -> Result<String> {
    net.validate()?;
    let doc = ModelDoc {
        format: MODEL_FORMAT.into(),
        version: VERSION,
        input_dim: net.input_dim(),
        output_dim: net.output_dim(),
        net: net.clone(),
    };
    Ok(serde_json::to_string(&doc)?)
}

pub fn model_from_json<T: Scalar>(s: &str) -> Result<DenseNet<T>> {
    let doc: ModelDoc<T> = serde_json::from_str(s)?;
    check_header(&doc.format, doc.version, MODEL_FORMAT)?;
    doc.net.validate()?;
    if doc.net.input_dim() != doc.input_dim || doc.net.output_dim() != doc.output_dim {
        return Err(Error::Format("declared dimensions disagree with the layers".into()));
    }
    Ok(doc.net)
}

/// Encoder plus the three angle heads, with the ranges they were trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseModelBundle<T> {
    pub encoder: DenseNet<T>,
    pub head_yaw: DenseNet<T>,
    pub head_pitch: DenseNet<T>,
    pub head_roll: DenseNet<T>,
    /// Lengths of the yaw/pitch/roll blocks of the encoder output.
    pub latent_dims: [usize; 3],
    pub grid: GridSpec,
}

impl<T: Scalar> PoseModelBundle<T> {
    pub fn head(&self, axis: Axis) -> &DenseNet<T> {
        match axis {
            Axis::Yaw => &self.head_yaw,
            Axis::Pitch => &self.head_pitch,
            Axis::Roll => &self.head_roll,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        if self.encoder.role != NetRole::Encoder {
            return Err(Error::Format(format!("encoder slot holds a {:?} net", self.encoder.role)));
        }
        if self.encoder.output_dim() != self.latent_dims.iter().sum::<usize>() {
            return Err(Error::Shape(format!(
                "encoder emits {} values, latent blocks {:?}",
                self.encoder.output_dim(),
                self.latent_dims
            )));
        }
        for (k, axis) in Axis::ALL.into_iter().enumerate() {
            let h = self.head(axis);
            h.validate()?;
            if h.role != NetRole::head(axis) {
                return Err(Error::Format(format!("{axis} head slot holds a {:?} net", h.role)));
            }
            if h.input_dim() != self.latent_dims[k] || h.output_dim() != 1 {
                return Err(Error::Shape(format!(
                    "{axis} head is {}→{}, latent block has {}",
                    h.input_dim(),
                    h.output_dim(),
                    self.latent_dims[k]
                )));
            }
        }
        self.grid.validate()
    }
}

#[derive(Serialize, Deserialize)]
struct BundleDoc<T> {
    format: String,
    version: u32,
    bundle: PoseModelBundle<T>,
}

pub fn bundle_to_json<T: Scalar>(b: &PoseModelBundle<T>) -> Result<String> {
    b.validate()?;
    let doc = BundleDoc { format: BUNDLE_FORMAT.into(), version: VERSION, bundle: b.clone() };
    Ok(serde_json::to_string(&doc)?)
}

pub fn bundle_from_json<T: Scalar>(s: &str) -> Result<PoseModelBundle<T>> {
    let doc: BundleDoc<T> = serde_json::from_str(s)?;
    check_header(&doc.format, doc.version, BUNDLE_FORMAT)?;
    doc.bundle.validate()?;
    Ok(doc.bundle)
}
