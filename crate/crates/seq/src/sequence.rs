//! Union-vocabulary layout: frame tokens, then latent codes, then specials.
//!
//! A sequence is `[BOS][condition…][x_1]` followed, for every later frame, by
//! a step `[z^1 … z^H][x_{t+1}]` (the code block is absent in frames-only mode).

use gobench_core::render::{TokenGrid, FRAME_TOKENS};
use serde::{Deserialize, Serialize};

use crate::SeqError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeqMode {
    FramesOnly,
    CodesOnly,
    CodesAndFrames,
}

impl SeqMode {
    pub fn has_codes(self) -> bool {
        self != SeqMode::FramesOnly
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SeqMode::FramesOnly => "frames_only",
            SeqMode::CodesOnly => "codes_only",
            SeqMode::CodesAndFrames => "codes_and_frames",
        }
    }

    pub fn parse(s: &str) -> Option<SeqMode> {
        match s {
            "frames_only" => Some(SeqMode::FramesOnly),
            "codes_only" => Some(SeqMode::CodesOnly),
            "codes_and_frames" => Some(SeqMode::CodesAndFrames),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub frame_vocab: u32,
    pub latent_vocab: u32,
    pub mode: SeqMode,
    pub horizon: usize,
    /// Tokens per frame (N²).
    pub frame_tokens: usize,
    #[serde(default)]
    pub condition: Vec<u32>,
}

/// Region a token id falls in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Frame,
    Latent,
    Special,
}

impl SequenceSpec {
    pub fn new(mode: SeqMode, board_size: usize, horizon: usize, latent_vocab: u32) -> SequenceSpec {
        SequenceSpec {
            frame_vocab: FRAME_TOKENS,
            latent_vocab,
            mode,
            horizon,
            frame_tokens: board_size * board_size,
            condition: Vec::new(),
        }
    }

    pub fn vocab(&self) -> usize {
        (self.frame_vocab + self.latent_vocab + 3) as usize
    }

    pub fn bos(&self) -> u32 {
        self.frame_vocab + self.latent_vocab
    }

    pub fn eos(&self) -> u32 {
        self.bos() + 1
    }

    pub fn pad(&self) -> u32 {
        self.bos() + 2
    }

    pub fn latent_token(&self, index: usize) -> u32 {
        self.frame_vocab + index as u32
    }

    pub fn region(&self, token: u32) -> Option<Region> {
        if token < self.frame_vocab {
            Some(Region::Frame)
        } else if token < self.frame_vocab + self.latent_vocab {
            Some(Region::Latent)
        } else if (token as usize) < self.vocab() {
            Some(Region::Special)
        } else {
            None
        }
    }

    /// Latent tokens per step (0 in frames-only mode).
    pub fn codes_per_step(&self) -> usize {
        if self.mode.has_codes() {
            self.horizon
        } else {
            0
        }
    }

    pub fn step_len(&self) -> usize {
        self.codes_per_step() + self.frame_tokens
    }

    pub fn prompt_len(&self) -> usize {
        1 + self.condition.len() + self.frame_tokens
    }

    /// Sequence length for a clip of `frames` frames.
    pub fn sequence_len(&self, frames: usize) -> usize {
        self.prompt_len() + frames.saturating_sub(1) * self.step_len()
    }

    /// Region required at offset `j` within a step.
    pub fn step_region(&self, j: usize) -> Region {
        if j < self.codes_per_step() {
            Region::Latent
        } else {
            Region::Frame
        }
    }

    pub fn validate(&self) -> Result<(), SeqError> {
        if self.frame_vocab == 0 || self.frame_tokens == 0 {
            return Err(SeqError::Spec("empty frame region".into()));
        }
        if self.mode.has_codes() && (self.horizon == 0 || self.latent_vocab == 0) {
            return Err(SeqError::Spec("code modes need H >= 1 and a latent vocabulary".into()));
        }
        if let Some(&t) = self.condition.iter().find(|&&t| t as usize >= self.vocab()) {
            return Err(SeqError::TokenOutOfRegion { position: 0, token: t });
        }
        Ok(())
    }

    fn frame_ids(&self, grid: &TokenGrid, position: usize) -> Result<Vec<u32>, SeqError> {
        if grid.tokens.len() != self.frame_tokens {
            return Err(SeqError::Shape(format!(
                "frame of {} tokens, spec expects {}",
                grid.tokens.len(),
                self.frame_tokens
            )));
        }
        for (i, &t) in grid.tokens.iter().enumerate() {
            if t >= self.frame_vocab {
                return Err(SeqError::TokenOutOfRegion { position: position + i, token: t });
            }
        }
        Ok(grid.tokens.clone())
    }

    /// The prompt `[BOS][condition][x]` used to start generation from one frame.
    pub fn prompt(&self, grid: &TokenGrid) -> Result<Vec<u32>, SeqError> {
        let mut ids = vec![self.bos()];
        ids.extend_from_slice(&self.condition);
        let f = self.frame_ids(grid, ids.len())?;
        ids.extend(f);
        Ok(ids)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub loss_mask: Vec<bool>,
    /// Offset at which each step after the prompt begins.
    pub steps: Vec<usize>,
}

/// `codes[t][h]` holds the codes of the transition into frame `t + 2`; it must
/// have `frames.len() - 1` rows of `H` entries in code modes and is ignored in
/// frames-only mode.
pub fn build_sequence(frames: &[TokenGrid], codes: &[Vec<usize>], spec: &SequenceSpec) -> Result<TokenSequence, SeqError> {
    spec.validate()?;
    if frames.is_empty() {
        return Err(SeqError::Shape("no frames".into()));
    }
    if spec.mode.has_codes()
        && (codes.len() != frames.len() - 1 || codes.iter().any(|row| row.len() != spec.horizon))
    {
        return Err(SeqError::Shape(format!(
            "expected {}x{} codes, got {} rows",
            frames.len() - 1,
            spec.horizon,
            codes.len()
        )));
    }
    let frame_mask = spec.mode != SeqMode::CodesOnly;
    let mut ids = spec.prompt(&frames[0])?;
    let mut loss_mask = vec![false; ids.len()];
    let mut steps = Vec::with_capacity(frames.len() - 1);
    for (t, frame) in frames.iter().enumerate().skip(1) {
        steps.push(ids.len());
        if spec.mode.has_codes() {
            for &c in &codes[t - 1] {
                if c >= spec.latent_vocab as usize {
                    return Err(SeqError::TokenOutOfRegion {
                        position: ids.len(),
                        token: spec.latent_token(c),
                    });
                }
                ids.push(spec.latent_token(c));
                loss_mask.push(true);
            }
        }
        let f = spec.frame_ids(frame, ids.len())?;
        ids.extend(f);
        loss_mask.resize(ids.len(), frame_mask);
    }
    Ok(TokenSequence { ids, loss_mask, steps })
}

/// Splits one step back into its codes and frame.
pub fn decode_step(tokens: &[u32], board_size: usize, spec: &SequenceSpec) -> Result<(Vec<usize>, TokenGrid), SeqError> {
    if tokens.len() != spec.step_len() || board_size * board_size != spec.frame_tokens {
        return Err(SeqError::MalformedStep(format!(
            "{} tokens for a step of {}",
            tokens.len(),
            spec.step_len()
        )));
    }
    let mut codes = Vec::with_capacity(spec.codes_per_step());
    let mut frame = Vec::with_capacity(spec.frame_tokens);
    for (j, &t) in tokens.iter().enumerate() {
        let want = spec.step_region(j);
        if spec.region(t) != Some(want) {
            return Err(SeqError::TokenOutOfRegion { position: j, token: t });
        }
        match want {
            Region::Latent => codes.push((t - spec.frame_vocab) as usize),
            _ => frame.push(t),
        }
    }
    Ok((
        codes,
        TokenGrid {
            size: board_size,
            tokens: frame,
        },
    ))
}
