//! Accuracy metrics, per-interval breakdowns, spectra and latency measurement.

mod intervals;
mod metrics;
mod report;
mod timing;

pub use intervals::{bin_of, default_interval_tables, interval_errors, IntervalBin, IntervalTable, DEFAULT_INTERVAL_BINS};
pub use metrics::{column_errors, mae, maev, MaeSummary, MaevSummary};
pub use report::{intervals_to_tsv, render_intervals, spectrum_rows, spectrum_to_tsv, MetricReport, SpectrumRow};
pub use timing::{benchmark_tpf, TimingStats};
