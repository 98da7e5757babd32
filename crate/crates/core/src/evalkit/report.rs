use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::intervals::IntervalTable;
use super::metrics::{mae, maev, MaeSummary, MaevSummary};
use super::timing::TimingStats;
use crate::error::Result;
use crate::multilinear::FactorSet;
use crate::posegen::EulerPose;
use crate::scalar::Scalar;

/// Accuracy of one estimator against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub samples: usize,
    pub mae: MaeSummary,
    pub maev: MaevSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingStats>,
}

impl MetricReport {
    pub fn compute<T: Scalar>(preds: &[EulerPose<T>], gts: &[EulerPose<T>], timing: Option<TimingStats>) -> Result<Self> {
        Ok(Self { samples: preds.len(), mae: mae(preds, gts)?, maev: maev(preds, gts)?, timing })
    }

    /// `metric<TAB>value` rows.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("metric\tvalue\n");
        for (k, v) in self.rows() {
            let _ = writeln!(s, "{k}\t{v}");
        }
        s
    }

    fn rows(&self) -> Vec<(&'static str, f64)> {
        let mut rows = vec![
            ("samples", self.samples as f64),
            ("mae_yaw", self.mae.yaw),
            ("mae_pitch", self.mae.pitch),
            ("mae_roll", self.mae.roll),
            ("mae_mean", self.mae.mean),
            ("maev_left", self.maev.left),
            ("maev_down", self.maev.down),
            ("maev_front", self.maev.front),
            ("maev_mean", self.maev.mean),
        ];
        if let Some(t) = &self.timing {
            rows.extend([
                ("tpf_mean_ms", t.mean * 1e3),
                ("tpf_median_ms", t.median * 1e3),
                ("tpf_p95_ms", t.p95 * 1e3),
            ]);
        }
        rows
    }

    /// Aligned two-column table for terminals.
    pub fn render(&self, title: &str) -> String {
        let mut s = format!("{title}\n");
        for (k, v) in self.rows() {
            if k == "samples" {
                let _ = writeln!(s, "  {k:<14} {v:>10}");
            } else {
                let _ = writeln!(s, "  {k:<14} {v:>10.4}");
            }
        }
        s
    }
}

/// `axis lo hi count mae` rows for every table; empty bins leave `mae` blank.
pub fn intervals_to_tsv(tables: &[IntervalTable]) -> String {
    let mut s = String::from("axis\tlo\thi\tcount\tmae\n");
    for t in tables {
        for b in &t.bins {
            let mae = b.mae.map(|m| m.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{}\t{}\t{}\t{}\t{mae}", t.axis, b.lo, b.hi, b.count);
        }
    }
    s
}

pub fn render_intervals(tables: &[IntervalTable]) -> String {
    let mut s = String::new();
    for t in tables {
        let _ = writeln!(s, "{} error by true angle", t.axis);
        for b in &t.bins {
            let mae = b.mae.map_or_else(|| "-".to_string(), |m| format!("{m:.3}"));
            let _ = writeln!(s, "  [{:>7.2}, {:>7.2}]  n={:<6} mae={mae}", b.lo, b.hi, b.count);
        }
    }
    s
}

/// One row per mode and component: singular value and cumulative energy share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub mode: usize,
    pub component: usize,
    pub singular_value: f64,
    pub cumulative_energy: f64,
}

pub fn spectrum_rows<T: Scalar>(fs: &FactorSet<T>) -> Result<Vec<SpectrumRow>> {
    let mut rows = Vec::new();
    for s in &fs.spectra {
        for k in 1..=s.singular_values.len() {
            rows.push(SpectrumRow {
                mode: s.mode,
                component: k,
                singular_value: s.singular_values[k - 1].as_f64(),
                cumulative_energy: s.energy_ratio(k)?.as_f64(),
            });
        }
    }
    Ok(rows)
}

pub fn spectrum_to_tsv(rows: &[SpectrumRow]) -> String {
    let mut s = String::from("mode\tcomponent\tsingular_value\tcumulative_energy\n");
    for r in rows {
        let _ = writeln!(s, "{}\t{}\t{}\t{}", r.mode, r.component, r.singular_value, r.cumulative_energy);
    }
    s
}
