use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::predict_fast;
use crate::neuralnet::PoseModelBundle;
use crate::scalar::Scalar;

/// Per-frame wall-clock statistics, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub frames: usize,
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
}

impl TimingStats {
    /// Summarizes raw per-frame durations.
    pub fn from_durations(durations: &[f64]) -> Result<Self> {
        if durations.is_empty() {
            return Err(Error::Empty("timing samples".into()));
        }
        let mut sorted = durations.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
        // nearest-rank percentile
        let p95 = sorted[((0.95 * n as f64).ceil() as usize).clamp(1, n) - 1];
        Ok(Self { frames: n, mean: sorted.iter().sum::<f64>() / n as f64, median, p95 })
    }
}

/// Times the fast path frame by frame on the calling thread, `repeats` passes over `samples`.
pub fn benchmark_tpf<T: Scalar>(bundle: &PoseModelBundle<T>, samples: &[Vec<T>], repeats: usize) -> Result<TimingStats> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    if samples.is_empty() {
        return Err(Error::Empty("benchmark samples".into()));
    }
    // one untimed pass to fault in weights and surface input errors
    predict_fast(bundle, &samples[0])?;
    let mut durations = Vec::with_capacity(repeats * samples.len());
    for _ in 0..repeats {
        for s in samples {
            let t0 = Instant::now();
            let est = predict_fast(bundle, s)?;
            durations.push(t0.elapsed().as_secs_f64());
            std::hint::black_box(est);
        }
    }
    TimingStats::from_durations(&durations)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_statistics() {
        let s = TimingStats::from_durations(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.frames, s.mean, s.median, s.p95), (4, 2.5, 2.5, 4.0));
        assert!(TimingStats::from_durations(&[]).is_err());
    }
}
