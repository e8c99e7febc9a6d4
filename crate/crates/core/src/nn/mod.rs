//! Dense tensors, a reverse-mode tape, and the pieces needed to train
//! embedding → LSTM → mean-pool → linear/ReLU → linear networks.

mod checkpoint;
mod loss;
mod lstm;
mod optim;
mod param;
mod real;
mod tape;
mod tensor;

use thiserror::Error;

pub use checkpoint::{write_atomic, Checkpoint, CheckpointError, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub(crate) use checkpoint::{put_str, put_u32, Reader};
pub use loss::{kl_value, softmax_t};
pub use lstm::{lstm_step, uniform, LstmNodes, LstmParams};
pub use optim::sgd_update;
pub use param::{ParamId, ParamStore, Parameter};
pub use real::{Real, Strides};
pub use tape::{Activation, Gradients, NodeId, Tape};
pub use tensor::{argmax, Tensor};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("empty sequence")]
    EmptySequence,
    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),
    #[error("target is not a probability distribution")]
    InvalidDistribution,
    #[error("loss must be a scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("learning rate must be positive, got {0}")]
    InvalidLearningRate(f64),
    #[error("duplicate parameter name {0}")]
    DuplicateParam(String),
    #[error("missing parameter {0}")]
    MissingParam(String),
}
