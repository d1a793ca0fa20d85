use std::sync::Arc;

use gobench_core::agent::{random_legal_move, Agent, AgentError, Decision};
use gobench_core::go::zobrist::derive_seed;
use gobench_core::go::{BoardState, Move};
use gobench_core::render::{extract_move, tokenize_state};
use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::generate::{generate, ArModel, CodeTargets, InterventionSpec, Policy};
use crate::idm::CodeIdm;
use crate::sequence::{decode_step, SeqMode, SequenceSpec};
use crate::SeqError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AgentStats {
    pub requested: u64,
    pub raw_legal: u64,
    pub fallbacks: u64,
}

/// Go player that generates one step from the current frame and reads the
/// move back through the inverse-dynamics mapping: the learned code
/// classifier when the model emits codes and one is supplied, the frame diff
/// otherwise (codes-only models require the classifier); illegal or unreadable
/// generations fall back to a uniformly random legal move.
pub struct SeqAgent {
    name: String,
    model: Arc<ArModel>,
    spec: SequenceSpec,
    idm: Option<Arc<CodeIdm>>,
    policy: Policy,
    targets: CodeTargets,
    seed: u64,
    decisions: u64,
    fallback: ChaCha8Rng,
    pub stats: AgentStats,
}

impl SeqAgent {
    pub fn new(
        name: &str,
        model: Arc<ArModel>,
        spec: SequenceSpec,
        idm: Option<Arc<CodeIdm>>,
        policy: Policy,
    ) -> Result<SeqAgent, SeqError> {
        spec.validate()?;
        if spec.mode == SeqMode::CodesOnly && idm.is_none() {
            return Err(SeqError::Spec("codes-only agents need a code inverse-dynamics model".into()));
        }
        if let (true, Some(idm)) = (spec.mode.has_codes(), &idm) {
            if idm.size * idm.size != spec.frame_tokens
                || idm.horizon != spec.horizon
                || idm.codebook != spec.latent_vocab as usize
            {
                return Err(SeqError::Spec("inverse-dynamics model does not match the sequence spec".into()));
            }
        }
        Ok(SeqAgent {
            name: name.to_string(),
            model,
            spec,
            idm,
            policy,
            targets: CodeTargets::None,
            seed: 0,
            decisions: 0,
            fallback: ChaCha8Rng::seed_from_u64(0),
            stats: AgentStats::default(),
        })
    }

    pub fn with_intervention(mut self, targets: CodeTargets) -> Result<SeqAgent, SeqError> {
        InterventionSpec { targets: targets.clone(), seed: 0 }.validate(self.spec.horizon)?;
        self.targets = targets;
        Ok(self)
    }

    /// The agent's raw proposal for `state`, before any fallback.
    pub fn propose(&mut self, state: &BoardState) -> Result<Move, SeqError> {
        let n = state.size();
        let grid = tokenize_state(state);
        let prompt = self.spec.prompt(&grid)?;
        let step_seed = derive_seed(self.seed, self.decisions);
        self.decisions += 1;
        let policy = match self.policy {
            Policy::Temperature { tau, .. } => Policy::Temperature {
                tau,
                seed: derive_seed(step_seed, 1),
            },
            p => p,
        };
        let intervention = InterventionSpec {
            targets: self.targets.clone(),
            seed: derive_seed(step_seed, 2),
        };
        let mut predictor = self.model.predictor();
        let tokens = generate(predictor.as_mut(), &prompt, &self.spec, policy, &intervention)?;
        if let (true, Some(idm)) = (self.spec.mode.has_codes(), &self.idm) {
            let codes: Vec<usize> = tokens[..self.spec.horizon]
                .iter().map(|&t| (t - self.spec.frame_vocab) as usize).collect();
            return idm.predict(state, &codes);
        }
        let (_, frame) = decode_step(&tokens, n, &self.spec)?;
        Ok(extract_move(&grid, &frame, state.to_move())?)
    }
}

impl Agent for SeqAgent {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn reset(&mut self, seed: u64) {
        self.seed = seed;
        self.decisions = 0;
        self.fallback = ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX));
    }

    fn decide(&mut self, history: &[BoardState]) -> Result<Decision, AgentError> {
        let state = history
            .last()
            .ok_or_else(|| AgentError::Other("empty history".into()))?;
        self.stats.requested += 1;
        let raw = self.propose(state);
        match raw {
            Ok(mv) if state.is_legal(mv).is_legal() => {
                self.stats.raw_legal += 1;
                Ok(Decision { mv, raw_legal: true })
            }
            other => {
                debug!("{}: falling back after {:?}", self.name, other);
                self.stats.fallbacks += 1;
                Ok(Decision {
                    mv: random_legal_move(state, &mut self.fallback),
                    raw_legal: false,
                })
            }
        }
    }
}
