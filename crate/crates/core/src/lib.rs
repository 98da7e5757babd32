//! Learning rotation manifolds from pose-consistent landmark tensors.
//!
//! The pipeline: synthesize (or load) landmark sets on a yaw/pitch/roll grid,
//! stack them into a 5-way tensor (identity × yaw × pitch × roll × feature),
//! decompose it with a truncated HOSVD, model every retained rotation-factor
//! column as a cosine of the angle, then distill the model into a dense
//! encoder plus three per-axis regression heads. A reconstruction-based
//! estimator over the same decomposition serves as a slow cross-check.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix `f64`, which is what the command-line tools use.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod evalkit;
pub mod linalg;
pub mod manifold;
pub mod multilinear;
pub mod neuralnet;
pub mod posegen;
pub mod scalar;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Scalar;

pub type Matrix64 = linalg::Matrix<f64>;
pub type Tensor64 = multilinear::Tensor<f64>;
pub type FactorSet64 = multilinear::FactorSet<f64>;
pub type EulerPose64 = posegen::EulerPose<f64>;
pub type PoseDataset64 = posegen::PoseDataset<f64>;
pub type PoseGrid64 = posegen::PoseGrid<f64>;
pub type SinusoidalParams64 = manifold::SinusoidalParams<f64>;
pub type DenseNet64 = neuralnet::DenseNet<f64>;
pub type PoseModelBundle64 = neuralnet::PoseModelBundle<f64>;
