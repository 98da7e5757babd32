use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::fast::PoseEstimate;
use crate::error::{Error, Result};
use crate::posegen::EulerPose;

/// One line of batch prediction output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<EulerPose<f64>>,
    pub predicted: EulerPose<f64>,
    pub out_of_range: bool,
    /// `|predicted − truth|` per angle, degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_error: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub elapsed: f64,
}

impl PredictionRecord {
    pub fn new<T: crate::Scalar>(id: i64, truth: Option<EulerPose<f64>>, est: &PoseEstimate<T>) -> Self {
        let p = est.pose;
        let predicted = EulerPose::new(p.yaw.as_f64(), p.pitch.as_f64(), p.roll.as_f64());
        let abs_error = truth.map(|t| {
            [(predicted.yaw - t.yaw).abs(), (predicted.pitch - t.pitch).abs(), (predicted.roll - t.roll).abs()]
        });
        Self {
            id,
            truth,
            predicted,
            out_of_range: est.out_of_range,
            abs_error,
            residual: est.residual.map(|r| r.as_f64()),
            elapsed: est.elapsed,
        }
    }
}

/// Writes one JSON object per line.
pub fn write_records<W: Write>(w: &mut W, records: &[PredictionRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut *w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(r: R) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Format(format!("line {}: {e}", n + 1)))?);
    }
    Ok(out)
}
