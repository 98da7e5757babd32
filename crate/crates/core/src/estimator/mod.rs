//! Pose estimators over a learned model: the encoder-plus-heads fast path and
//! the reconstruction search used to cross-check it.

mod fast;
mod oracle;
mod records;

pub use fast::{predict_fast, PoseEstimate};
pub use oracle::{predict_oracle, predict_oracle_traced, solve_identity, IdentitySolution, OracleConfig};
pub use records::{read_records, write_records, PredictionRecord};
