//! Dataset files: JSON lines, a header record followed by one record per sample.
//!
//! ```text
//! {"format":"rotman-dataset","version":1,"n_landmarks":30,"grid":{...},"seed":42}
//! {"id":0,"yaw":-50.0,"pitch":-40.0,"roll":-30.0,"landmarks":[x0,y0,z0,x1,...]}
//! ```

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::dataset::{GridSpec, PoseDataset, Sample};
use super::geometry::EulerPose;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DATASET_FORMAT: &str = "rotman-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub n_landmarks: usize,
    /// Present for grid-generated (pose-consistent) sets.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl DatasetHeader {
    pub fn new(n_landmarks: usize, grid: Option<GridSpec>, seed: Option<u64>) -> Self {
        Self { format: DATASET_FORMAT.into(), version: DATASET_VERSION, n_landmarks, grid, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: i64,
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub landmarks: Vec<f64>,
}

impl DatasetRecord {
    pub fn from_sample<T: Scalar>(s: &Sample<T>) -> Self {
        Self {
            id: s.id,
            yaw: s.pose.yaw.as_f64(),
            pitch: s.pose.pitch.as_f64(),
            roll: s.pose.roll.as_f64(),
            landmarks: s.features.iter().map(|x| x.as_f64()).collect(),
        }
    }

    pub fn to_sample<T: Scalar>(&self) -> Sample<T> {
        Sample {
            id: self.id,
            pose: EulerPose::new(T::lit(self.yaw), T::lit(self.pitch), T::lit(self.roll)),
            features: self.landmarks.iter().map(|&x| T::lit(x)).collect(),
        }
    }
}

pub fn write_dataset<W: Write, T: Scalar>(w: &mut W, header: &DatasetHeader, d: &PoseDataset<T>) -> Result<()> {
    serde_json::to_writer(&mut *w, header)?;
    w.write_all(b"\n")?;
    for s in &d.samples {
        serde_json::to_writer(&mut *w, &DatasetRecord::from_sample(s))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_dataset<R: BufRead, T: Scalar>(r: R) -> Result<(DatasetHeader, PoseDataset<T>)> {
    let mut lines = r.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let (_, first) = lines.next().ok_or_else(|| Error::Format("empty dataset file".into()))?;
    let header: DatasetHeader =
        serde_json::from_str(&first?).map_err(|e| Error::Format(format!("dataset header: {e}")))?;
    if header.format != DATASET_FORMAT {
        return Err(Error::Format(format!("unknown dataset format {:?}", header.format)));
    }
    if header.version != DATASET_VERSION {
        return Err(Error::Format(format!("unsupported dataset version {}", header.version)));
    }
    let mut samples = Vec::new();
    for (lineno, line) in lines {
        let rec: DatasetRecord =
            serde_json::from_str(&line?).map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        if rec.landmarks.len() != 3 * header.n_landmarks {
            return Err(Error::Format(format!(
                "line {}: {} landmark values, header says {} landmarks",
                lineno + 1,
                rec.landmarks.len(),
                header.n_landmarks
            )));
        }
        if rec.landmarks.iter().chain([rec.yaw, rec.pitch, rec.roll].iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("line {}", lineno + 1)));
        }
        samples.push(rec.to_sample());
    }
    Ok((header, PoseDataset::new(samples)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_errors() {
        let d = PoseDataset::new(vec![
            Sample { id: 3, pose: EulerPose::new(10.0, -5.5, 0.25), features: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6] },
            Sample { id: 4, pose: EulerPose::new(0.0, 0.0, 0.0), features: vec![1.0; 6] },
        ])
        .unwrap();
        let header = DatasetHeader::new(2, Some(GridSpec::default()), Some(9));
        let mut buf = Vec::new();
        write_dataset(&mut buf, &header, &d).unwrap();
        let (h, back) = read_dataset::<_, f64>(buf.as_slice()).unwrap();
        assert_eq!(h, header);
        assert_eq!(back, d);

        let text = String::from_utf8(buf).unwrap();
        let short = text.replace("[1.0,1.0,1.0,1.0,1.0,1.0]", "[1.0,1.0,1.0]");
        assert!(matches!(read_dataset::<_, f64>(short.as_bytes()), Err(Error::Format(_))));
        assert!(matches!(read_dataset::<_, f64>("".as_bytes()), Err(Error::Format(_))));
        assert!(matches!(read_dataset::<_, f64>("{\"oops\":1}\n".as_bytes()), Err(Error::Format(_))));
    }
}
