//! Pipeline commands behind the `rotman` binary: dataset generation, tensor
//! decomposition, curve fitting, network training, evaluation and benchmarking.

pub mod commands;
pub mod config;
pub mod error;
pub mod parallel;

pub use commands::{
    cmd_bench, cmd_decompose, cmd_eval, cmd_fit, cmd_generate, cmd_predict, cmd_train, run_pipeline,
};
pub use config::{RunConfig, CONFIG_ENV};
pub use error::{CliError, CliResult};
