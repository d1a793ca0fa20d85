//! Dense f64 numerical kernels with exact, hand-derived backward passes.
//!
//! There is no autodiff: every composite implements its own backward and is
//! checked against central finite differences.

pub mod attention;
pub mod checkpoint;
pub mod fsq;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod optim;
pub mod params;
pub mod tensor;

use thiserror::Error;

pub use attention::{attention, attention_backward, AttnShape, Mask, MultiHeadAttention};
pub use fsq::{FsqMode, FsqOutput, FsqSpec};
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport};
pub use layers::{gelu, gelu_backward, Embedding, LayerNorm, Linear, Mlp};
pub use loss::{cross_entropy, mse, softmax};
pub use optim::{adamw_step, AdamConfig, AdamState};
pub use params::{ParamId, ParamStore};
pub use tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("loss mask selects no positions")]
    EmptyMask,
    #[error("target {target} outside vocabulary of {vocab}")]
    TargetOutOfRange { target: usize, vocab: usize },
    #[error("non-finite gradient in {0}")]
    NonFinite(String),
    #[error("code index {index} outside codebook of {size}")]
    CodeOutOfRange { index: usize, size: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
