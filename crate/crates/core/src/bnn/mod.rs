//! Binarized 1D convolutional network: latent-weight training with a
//! straight-through estimator, batch norm, and RMSProp.

mod checkpoint;
pub mod ops;
mod model;
mod optim;
mod scalar;
mod tensor;
mod train;

use thiserror::Error;

pub use checkpoint::{encode_checkpoint, load_checkpoint, save_checkpoint, PayloadSpan, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use model::{Activation, Architecture, BnnModel, ConvSpec, Layer, Model, StepOutput};
pub use ops::{batchnorm_forward, conv1d_forward, effective_weights, loss_and_grad, maxpool1d, sign, sign_forward, softmax, ste_backward, BatchNormState};
pub use optim::RmsProp;
pub use scalar::Scalar;
pub use tensor::{Batch, LatentTensor};
pub use train::{label_of, predict, predict_many, train, TrainConfig, TrainHistory};

#[derive(Debug, Error)]
pub enum BnnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("input dimension {found} does not match model input {expected}")]
    DimMismatch { expected: usize, found: usize },
    #[error("wrong input kind: {0}")]
    InputKind(String),
    #[error("batch of {0} sample(s) is too small for batch statistics")]
    DegenerateBatch(usize),
    #[error("training set is empty")]
    EmptyDataset,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
