//! Neural-network numerics: tensors, a closed set of layers, softmax
//! cross-entropy, momentum SGD, a plateau scheduler and a finite-difference
//! gradient checker. Everything runs in `f64`.

mod config;
mod gradcheck;
mod init;
mod layers;
pub mod linalg;
mod loss;
mod network;
mod optim;
mod sched;
mod tensor;

use thiserror::Error;

pub use config::{Monitor, TrainConfig};
pub use gradcheck::{compare_with_finite_differences, grad_check};
pub use init::{he_init, zero_bias};
pub use layers::{Conv2d, Dense, Flatten, Layer, MaxPool2d, Relu};
pub use loss::{argmax_rows, softmax_cross_entropy};
pub use network::{ArchSpec, LayerSpec, Network};
pub use optim::SgdMomentum;
pub use sched::{Mode, PlateauScheduler};
pub use tensor::Tensor;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid tensor shape {0:?}: dimensions must be positive")]
    InvalidShape(Vec<usize>),
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    ShapeMismatch { context: String, expected: String, found: String },
    #[error("label {label} at index {index} is outside [0, {num_classes})")]
    LabelOutOfRange { index: usize, label: usize, num_classes: usize },
    #[error("backward called without a cached forward pass (layer {layer})")]
    NoForwardCache { layer: usize },
    #[error("invalid architecture: {0}")]
    InvalidArch(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("{0}")]
    InvalidArgument(String),
}
