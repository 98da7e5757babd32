//! Synthetic pose-consistent landmark data with exact rotation labels.

mod dataset;
mod geometry;
pub mod io;
mod shapes;

pub use dataset::{
    generate_at_poses, generate_dataset, populate_tensor, random_poses, render_sample, split_dataset, split_ids,
    tensor_to_dataset, AngleRange, GridSpec, PoseDataset, PoseGrid, Sample,
};
pub use geometry::{
    apply3, det3, euler_to_matrix, normalize_landmarks, rotate_by, rotate_shape, transpose3, Axis, EulerPose,
    LandmarkSet, Mat3,
};
pub use shapes::{make_identity_shapes, template_shape};
