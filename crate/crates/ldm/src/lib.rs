//! Latent dynamics model: compresses the changes from a frame to each of its
//! next `H` frames into `H` finite-scalar-quantized codes.
//!
//! Pipeline per window: linear patch embedding + causal temporal attention
//! (unquantized features), one learned query per horizon step cross-attending
//! to the feature prefix it may see, an MLP head, FSQ, and a decoder that
//! predicts each future frame from first-frame features and the codes so far.

pub mod config;
pub mod input;
pub mod model;
pub mod train;

use thiserror::Error;

pub use config::{InputMode, LdmConfig};
pub use model::{pad_window, LatentCodeSet, Ldm, LdmCache, LdmOutput};
pub use train::train_ldm;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LdmError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("window start {t} outside clip of length {len}")]
    WindowIndex { t: usize, len: usize },
    #[error("no training windows")]
    EmptyDataset,
    #[error("non-finite loss {loss} at step {step}")]
    NonFinite { step: u64, loss: f64 },
    #[error(transparent)]
    Nn(#[from] gobench_nn::NnError),
}

impl Ldm {
    /// Writes parameters with the configuration as checkpoint metadata.
    pub fn save(&self, out: &mut impl std::io::Write) -> Result<(), LdmError> {
        let meta = serde_json::json!({ "kind": "ldm", "config": self.config });
        Ok(gobench_nn::checkpoint::write_checkpoint(out, &self.store, meta)?)
    }

    pub fn load(input: &mut impl std::io::Read) -> Result<Ldm, LdmError> {
        let (loaded, meta) = gobench_nn::checkpoint::read_checkpoint(input)?;
        let config: LdmConfig = serde_json::from_value(meta["config"].clone())
            .map_err(|e| LdmError::Config(format!("checkpoint metadata: {e}")))?;
        let mut model = Ldm::new(config)?;
        gobench_nn::checkpoint::load_into(&mut model.store, &loaded)?;
        Ok(model)
    }
}
