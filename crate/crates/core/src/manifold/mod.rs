//! Cosine models of the rotation subspaces and their dense resampling.

mod fine;
mod fit;
mod params;

pub use fine::{fine_row_count, gen_fine_factors, FineFactorTable};
pub use fit::{fit_axis, fit_cosine, fourier_init, levenberg_marquardt, FitConfig, LmReport};
pub(crate) use fit::golden_min;
pub use params::{
    params_from_json, params_to_json, AxisFit, CosineParams, DimensionFit, SinusoidalParams, PARAMS_FORMAT,
};
