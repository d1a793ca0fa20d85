use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ngram::NGram;
use crate::sequence::{Region, SeqMode, SequenceSpec};
use crate::transformer::{KvCache, TinyTransformer};
use crate::SeqError;

/// Incremental next-token source.
pub trait Predictor {
    fn push(&mut self, token: u32) -> Result<(), SeqError>;
    /// Unnormalised scores for the next token (log-probabilities or logits).
    fn scores(&self) -> Vec<f64>;
}

pub struct TfPredictor<'a> {
    model: &'a TinyTransformer,
    cache: KvCache,
    logits: Vec<f64>,
}

impl<'a> TfPredictor<'a> {
    pub fn new(model: &'a TinyTransformer) -> TfPredictor<'a> {
        TfPredictor {
            model,
            cache: model.start(),
            logits: vec![0.0; model.config.vocab],
        }
    }
}

impl Predictor for TfPredictor<'_> {
    fn push(&mut self, token: u32) -> Result<(), SeqError> {
        self.logits = self.model.step(&mut self.cache, token)?;
        Ok(())
    }

    fn scores(&self) -> Vec<f64> {
        self.logits.clone()
    }
}

pub struct NGramPredictor<'a> {
    model: &'a NGram,
    context: Vec<u32>,
}

impl<'a> NGramPredictor<'a> {
    pub fn new(model: &'a NGram) -> NGramPredictor<'a> {
        NGramPredictor { model, context: Vec::new() }
    }
}

impl Predictor for NGramPredictor<'_> {
    fn push(&mut self, token: u32) -> Result<(), SeqError> {
        self.context.push(token);
        Ok(())
    }

    fn scores(&self) -> Vec<f64> {
        self.model.next(&self.context).iter().map(|p| p.ln()).collect()
    }
}

#[derive(Clone, Debug)]
pub enum ArModel {
    NGram(NGram),
    Transformer(TinyTransformer),
}

impl ArModel {
    pub fn predictor(&self) -> Box<dyn Predictor + '_> {
        match self {
            ArModel::NGram(m) => Box::new(NGramPredictor::new(m)),
            ArModel::Transformer(m) => Box::new(TfPredictor::new(m)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Policy {
    Greedy,
    Temperature { tau: f64, seed: u64 },
}

/// Which code positions (1-based horizon indices) are replaced by random tokens.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeTargets {
    None,
    All,
    Indices(Vec<usize>),
}

impl CodeTargets {
    pub fn covers(&self, h: usize) -> bool {
        match self {
            CodeTargets::None => false,
            CodeTargets::All => true,
            CodeTargets::Indices(v) => v.contains(&h),
        }
    }

    pub fn label(&self) -> String {
        match self {
            CodeTargets::None => "None".into(),
            CodeTargets::All => "All".into(),
            CodeTargets::Indices(v) => v.iter().map(|h| h.to_string()).collect::<Vec<_>>().join("+"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterventionSpec {
    pub targets: CodeTargets,
    pub seed: u64,
}

impl InterventionSpec {
    pub fn none() -> InterventionSpec {
        InterventionSpec {
            targets: CodeTargets::None,
            seed: 0,
        }
    }

    pub fn validate(&self, horizon: usize) -> Result<(), SeqError> {
        if let CodeTargets::Indices(v) = &self.targets {
            if let Some(&h) = v.iter().find(|&&h| h == 0 || h > horizon) {
                return Err(SeqError::Spec(format!("code index {h} outside 1..={horizon}")));
            }
        }
        Ok(())
    }
}

/// Highest-scoring token of `region` (lowest id on ties), or a temperature
/// sample restricted to it.
fn choose(scores: &[f64], spec: &SequenceSpec, region: Region, policy: Policy, rng: &mut ChaCha8Rng) -> u32 {
    let (lo, hi) = match region {
        Region::Latent => (spec.frame_vocab, spec.frame_vocab + spec.latent_vocab),
        _ => (0, spec.frame_vocab),
    };
    let slice = &scores[lo as usize..hi as usize];
    match policy {
        Policy::Greedy => {
            let mut best = 0;
            for (i, &s) in slice.iter().enumerate() {
                if s > slice[best] {
                    best = i;
                }
            }
            lo + best as u32
        }
        Policy::Temperature { tau, .. } => {
            let max = slice.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = slice.iter().map(|s| ((s - max) / tau.max(1e-12)).exp()).collect();
            let total: f64 = weights.iter().sum();
            let mut u = rng.gen::<f64>() * total;
            for (i, w) in weights.iter().enumerate() {
                if u < *w {
                    return lo + i as u32;
                }
                u -= w;
            }
            hi - 1
        }
    }
}

/// Feeds `prompt` and generates the next step: `H` codes then `F` frame tokens
/// (codes only in codes-only mode). Region masking is unconditional.
pub fn generate(
    predictor: &mut dyn Predictor,
    prompt: &[u32],
    spec: &SequenceSpec,
    policy: Policy,
    intervention: &InterventionSpec,
) -> Result<Vec<u32>, SeqError> {
    intervention.validate(spec.horizon)?;
    if prompt.len() < spec.prompt_len()
        || prompt[0] != spec.bos()
        || (prompt.len() - spec.prompt_len()) % spec.step_len() != 0
    {
        return Err(SeqError::MisalignedPrompt(prompt.len()));
    }
    for &t in prompt {
        predictor.push(t)?;
    }
    let count = match spec.mode {
        SeqMode::CodesOnly => spec.horizon,
        _ => spec.step_len(),
    };
    let seed = match policy {
        Policy::Temperature { seed, .. } => seed,
        Policy::Greedy => 0,
    };
    let mut sample_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut swap_rng = ChaCha8Rng::seed_from_u64(intervention.seed);
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        let region = spec.step_region(j);
        let token = if region == Region::Latent && intervention.targets.covers(j + 1) {
            spec.latent_token(swap_rng.gen_range(0..spec.latent_vocab as usize))
        } else {
            choose(&predictor.scores(), spec, region, policy, &mut sample_rng)
        };
        out.push(token);
        if j + 1 < count {
            predictor.push(token)?;
        }
    }
    Ok(out)
}
