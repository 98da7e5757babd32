//! N-way tensor algebra: unfolding, n-mode products and truncated HOSVD.

mod hosvd;
pub mod io;
mod tensor;

pub use hosvd::{
    canonicalize_signs, default_pose_ranks, energy_ratio, hosvd, identity_basis, reconstruct,
    reconstruct_sample, FactorSet, ModeSpectrum, PoseMode,
};
pub use tensor::Tensor;
pub(crate) use tensor::increment;
