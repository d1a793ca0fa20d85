use gobench_nn::{adamw_step, AdamConfig, AdamState};
use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sequence::TokenSequence;
use crate::transformer::{TinyTransformer, TransformerConfig};
use crate::SeqError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArTrainConfig {
    pub model: TransformerConfig,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub steps: u64,
    pub log_every: u64,
    pub seed: u64,
}

impl Default for ArTrainConfig {
    fn default() -> Self {
        ArTrainConfig {
            model: TransformerConfig::default(),
            adam: AdamConfig::ar(),
            batch_size: 16,
            steps: 2000,
            log_every: 100,
            seed: 0,
        }
    }
}

const SHUFFLE_SALT: u64 = 0xa5_0b_5e_11;

/// Trains on `corpus` with masked next-token cross-entropy. Returns the model
/// and the per-step batch-mean loss.
pub fn train_ar(
    corpus: &[TokenSequence],
    config: &ArTrainConfig,
    mut on_log: impl FnMut(u64, f64, &TinyTransformer),
) -> Result<(TinyTransformer, Vec<f64>), SeqError> {
    if corpus.is_empty() {
        return Err(SeqError::EmptyCorpus);
    }
    config.adam.validate()?;
    let mut model = TinyTransformer::new(config.model.clone())?;
    let mut adam = AdamState::new(&model.store);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_SALT);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0;
    let batch = config.batch_size.max(1);
    let scale = 1.0 / batch as f64;
    let mut losses = Vec::with_capacity(config.steps as usize);
    for step in 1..=config.steps {
        model.store.zero_grad();
        let mut total = 0.0;
        for _ in 0..batch {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            let seq = &corpus[order[cursor]];
            cursor += 1;
            let (_, loss, cache) = model.forward(&seq.ids, &seq.loss_mask)?;
            total += loss;
            model.backward(&cache, scale);
        }
        let loss = total * scale;
        if !loss.is_finite() {
            return Err(SeqError::NonFinite { step, loss });
        }
        adamw_step(&mut model.store, &mut adam, &config.adam)?;
        losses.push(loss);
        if step % config.log_every.max(1) == 0 || step == config.steps {
            info!("ar step {step}: loss {loss:.5}");
            on_log(step, loss, &model);
        }
    }
    Ok((model, losses))
}
