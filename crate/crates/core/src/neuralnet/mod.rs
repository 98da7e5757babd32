//! Dense feed-forward networks: the landmark encoder, the per-axis angle heads,
//! their training loop and file formats.

mod io;
mod net;
mod targets;
mod train;

pub use io::{bundle_from_json, bundle_to_json, model_from_json, model_to_json, PoseModelBundle, BUNDLE_FORMAT, MODEL_FORMAT};
pub use net::{
    build_encoder, build_head, build_head_for, Activation, DenseLayer, DenseNet, LayerGrad, NetRole, TrainingMeta, ENCODER_HIDDEN,
    ENCODER_OUTPUT, HEAD_HIDDEN, HEAD_INPUT,
};
pub use targets::{encoder_targets, head_training_set, PredictedLatents, TargetSource};
pub use train::{train, Loss, TrainConfig, TrainReport};
