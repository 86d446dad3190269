//! Feed-forward CNN training engine.

mod adam;
mod arch;
mod checkpoint;
mod gradcheck;
mod layers;
mod model;
mod real;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use arch::{ActShape, ArchKind, ArchSpec, LayerSpec, DEFAULT_DROPOUT};
pub use checkpoint::{decode_model, encode_model, read_model, write_model, MODEL_MAGIC};
pub use gradcheck::{grad_check, GradCheck};
pub use layers::{
    col2im, conv_backward, conv_forward, cross_entropy, dense_backward, dense_forward,
    dropout_eval, dropout_train, im2col, relu, relu_backward, relu_inplace, softmax_rows,
    ConvGeom, Shape3,
};
pub use model::{argmax, build_model, Mode, Model, Trace, TrainSummary};
pub use real::Real;
pub use train::{
    evaluate_loss, train, EarlyStop, EpochStats, LabeledData, TrainConfig, TrainReport,
};
