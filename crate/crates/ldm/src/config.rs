use gobench_nn::{AdamConfig, FsqSpec};
use serde::{Deserialize, Serialize};

use crate::LdmError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InputMode {
    /// One-hot Empty/Black/White planes per intersection.
    BoardPlanes,
    /// Rendered frame downsampled to `size` x `size` luminance.
    Grayscale { size: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdmConfig {
    /// Number of future steps compressed per window (H).
    pub horizon: usize,
    /// Clip length (T).
    pub clip_len: usize,
    pub board_size: usize,
    pub input: InputMode,
    pub dim: usize,
    pub heads: usize,
    /// Spatial grid side (g); the input is cut into g x g patches.
    pub grid: usize,
    pub head_hidden: usize,
    pub decoder_hidden: usize,
    /// Decoder depth: 1 = one hidden layer, 2 = two GELU stages.
    pub decoder_layers: usize,
    /// Decoder predicts the change relative to the first frame (adds it back).
    pub first_frame_skip: bool,
    pub fsq: FsqSpec,
    pub adam: AdamConfig,
    pub batch_size: usize,
    /// Training steps run by `train_ldm`.
    pub steps: u64,
    pub log_every: u64,
    pub seed: u64,
}

impl Default for LdmConfig {
    fn default() -> Self {
        LdmConfig {
            horizon: 5,
            clip_len: 6,
            board_size: 9,
            input: InputMode::BoardPlanes,
            dim: 64,
            heads: 4,
            grid: 3,
            head_hidden: 64,
            decoder_hidden: 128,
            decoder_layers: 1,
            first_frame_skip: false,
            fsq: FsqSpec::default(),
            adam: AdamConfig::ldm(),
            batch_size: 16,
            steps: 2000,
            log_every: 100,
            seed: 0,
        }
    }
}

impl LdmConfig {
    pub fn validate(&self) -> Result<(), LdmError> {
        let bad = |m: String| Err(LdmError::Config(m));
        if self.horizon < 1 {
            return bad("horizon must be at least 1".into());
        }
        if self.clip_len < 2 {
            return bad("clip length must be at least 2".into());
        }
        if self.heads == 0 || self.dim % self.heads != 0 {
            return bad(format!("dim {} not divisible by {} heads", self.dim, self.heads));
        }
        let side = self.input_side();
        if self.grid == 0 || side % self.grid != 0 {
            return bad(format!("input side {side} not divisible by grid {}", self.grid));
        }
        if !(1..=2).contains(&self.decoder_layers) {
            return bad(format!("decoder depth {} not in 1..=2", self.decoder_layers));
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        self.adam.validate().map_err(|e| LdmError::Config(e.to_string()))?;
        gobench_nn::FsqSpec::new(self.fsq.levels.clone()).map_err(|e| LdmError::Config(e.to_string()))?;
        Ok(())
    }

    fn input_side(&self) -> usize {
        match self.input {
            InputMode::BoardPlanes => self.board_size,
            InputMode::Grayscale { size } => size,
        }
    }

    fn channels(&self) -> usize {
        match self.input {
            InputMode::BoardPlanes => 3,
            InputMode::Grayscale { .. } => 1,
        }
    }

    /// Number of spatial positions (g²).
    pub fn positions(&self) -> usize {
        self.grid * self.grid
    }

    /// Values per patch.
    pub fn patch_len(&self) -> usize {
        let b = self.input_side() / self.grid;
        b * b * self.channels()
    }

    pub fn frame_len(&self) -> usize {
        self.positions() * self.patch_len()
    }

    /// Frames per window (H + 1).
    pub fn window_len(&self) -> usize {
        self.horizon + 1
    }

    pub fn code_dim(&self) -> usize {
        self.fsq.dim()
    }
}
