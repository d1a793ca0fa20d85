use serde::{Deserialize, Serialize};

use crate::params::ParamStore;
use crate::tensor::Tensor;
use crate::NnError;

/// AdamW hyperparameters with linear warmup followed by cosine decay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub warmup: u64,
    pub max_steps: u64,
    /// Floor of the cosine decay, as a fraction of `lr`.
    pub min_lr_ratio: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig::ldm()
    }
}

impl AdamConfig {
    /// Latent dynamics model defaults.
    pub fn ldm() -> AdamConfig {
        AdamConfig {
            lr: 5.4e-5,
            beta1: 0.5,
            beta2: 0.9,
            eps: 1e-8,
            weight_decay: 0.01,
            warmup: 100,
            max_steps: 2000,
            min_lr_ratio: 0.0,
        }
    }

    /// Sequence model defaults.
    pub fn ar() -> AdamConfig {
        AdamConfig {
            lr: 3.0e-5,
            beta1: 0.9,
            beta2: 0.98,
            eps: 1e-8,
            weight_decay: 0.0,
            warmup: 100,
            max_steps: 2000,
            min_lr_ratio: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let ok = (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.warmup <= self.max_steps
            && self.lr.is_finite()
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(NnError::Config(format!("invalid optimizer config {self:?}")))
        }
    }

    /// Learning rate at 1-based `step`.
    pub fn lr_at(&self, step: u64) -> f64 {
        if self.warmup > 0 && step <= self.warmup {
            return self.lr * (step as f64 / self.warmup as f64);
        }
        let span = self.max_steps.saturating_sub(self.warmup);
        if span == 0 {
            return self.lr;
        }
        let progress = ((step - self.warmup) as f64 / span as f64).min(1.0);
        let floor = self.lr * self.min_lr_ratio;
        floor + (self.lr - floor) * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
    }
}

/// First and second moment buffers, one pair per parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub step: u64,
}

impl AdamState {
    pub fn new(store: &ParamStore) -> AdamState {
        AdamState {
            m: store.values().iter().map(|t| Tensor::zeros(&t.shape)).collect(),
            v: store.values().iter().map(|t| Tensor::zeros(&t.shape)).collect(),
            step: 0,
        }
    }
}

/// One decoupled-weight-decay Adam update using the gradients held in `store`.
/// Rejects non-finite gradients without touching any parameter.
pub fn adamw_step(store: &mut ParamStore, state: &mut AdamState, config: &AdamConfig) -> Result<f64, NnError> {
    for id in store.ids() {
        if store.grad(id).iter().any(|g| !g.is_finite()) {
            return Err(NnError::NonFinite(store.name(id).to_string()));
        }
    }
    state.step += 1;
    let t = state.step;
    let lr = config.lr_at(t);
    let bc1 = 1.0 - config.beta1.powi(t as i32);
    let bc2 = 1.0 - config.beta2.powi(t as i32);
    let (values, grads) = store.parts_mut();
    for (i, (theta, g)) in values.iter_mut().zip(grads).enumerate() {
        let m = &mut state.m[i].data;
        let v = &mut state.v[i].data;
        for j in 0..theta.data.len() {
            let gj = g.data[j];
            m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * gj;
            v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * gj * gj;
            let mhat = m[j] / bc1;
            let vhat = v[j] / bc2;
            theta.data[j] -= lr * (mhat / (vhat.sqrt() + config.eps) + config.weight_decay * theta.data[j]);
        }
    }
    Ok(lr)
}
