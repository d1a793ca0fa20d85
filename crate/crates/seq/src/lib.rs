//! Sequence side of the benchmark: union-vocabulary sequences of frames and
//! latent codes, next-token models over them, generation with code
//! intervention, and an agent that plays Go by generating its next frame.

pub mod agent;
pub mod corpus;
pub mod generate;
pub mod idm;
pub mod ngram;
pub mod sequence;
pub mod train;
pub mod transformer;

use thiserror::Error;

pub use agent::{AgentStats, SeqAgent};
pub use generate::{generate, ArModel, CodeTargets, InterventionSpec, Policy, Predictor};
pub use idm::{CodeIdm, CodeIdmConfig, IdmExample};
pub use ngram::NGram;
pub use sequence::{build_sequence, decode_step, Region, SeqMode, SequenceSpec, TokenSequence};
pub use train::{train_ar, ArTrainConfig};
pub use transformer::{KvCache, TinyTransformer, TransformerConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeqError {
    #[error("invalid sequence spec: {0}")]
    Spec(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("token {token} at position {position} is outside its region")]
    TokenOutOfRegion { position: usize, token: u32 },
    #[error("malformed step: {0}")]
    MalformedStep(String),
    #[error("prompt of length {0} is not step-aligned")]
    MisalignedPrompt(usize),
    #[error("sequence of {len} tokens exceeds context {context}")]
    ContextOverflow { len: usize, context: usize },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("non-finite loss {loss} at step {step}")]
    NonFinite { step: u64, loss: f64 },
    #[error("corpus i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Nn(#[from] gobench_nn::NnError),
    #[error(transparent)]
    Render(#[from] gobench_core::render::RenderError),
}
