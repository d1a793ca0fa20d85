use gobench_nn::{adamw_step, AdamState, FsqMode};
use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::LdmConfig;
use crate::model::{pad_window, Ldm};
use crate::LdmError;

/// Seeds the shuffling stream apart from parameter initialisation.
const SHUFFLE_SALT: u64 = 0x5eed_0f_5a17;

/// Trains for `config.steps` steps over every `(clip, t)` window, calling
/// `on_log(step, loss, model)` every `config.log_every` steps and after the last.
/// Returns the model and the per-step batch-mean loss.
pub fn train_ldm(
    clips: &[Vec<Vec<f64>>],
    config: &LdmConfig,
    mut on_log: impl FnMut(u64, f64, &Ldm),
) -> Result<(Ldm, Vec<f64>), LdmError> {
    let windows: Vec<(usize, usize)> = clips
        .iter()
        .enumerate()
        .flat_map(|(c, clip)| (1..=clip.len()).map(move |t| (c, t)))
        .collect();
    if windows.is_empty() {
        return Err(LdmError::EmptyDataset);
    }
    let mut model = Ldm::new(config.clone())?;
    let mut adam = AdamState::new(&model.store);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_SALT);
    let mut order = windows.clone();
    order.shuffle(&mut rng);
    let mut cursor = 0;
    let mut losses = Vec::with_capacity(config.steps as usize);
    let scale = 1.0 / config.batch_size as f64;

    for step in 1..=config.steps {
        model.store.zero_grad();
        let mut total = 0.0;
        for _ in 0..config.batch_size {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            let (c, t) = order[cursor];
            cursor += 1;
            let window = pad_window(&clips[c], t, config.horizon)?;
            let (out, cache) = model.forward(&window, FsqMode::Quantize)?;
            total += out.loss;
            model.backward(&cache, scale);
        }
        let loss = total * scale;
        if !loss.is_finite() {
            return Err(LdmError::NonFinite { step, loss });
        }
        adamw_step(&mut model.store, &mut adam, &config.adam)?;
        losses.push(loss);
        if step % config.log_every.max(1) == 0 || step == config.steps {
            info!("ldm step {step}: loss {loss:.6}");
            on_log(step, loss, &model);
        }
    }
    Ok((model, losses))
}
