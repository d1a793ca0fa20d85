//! Dense layers. Each `forward` returns whatever `backward` needs; `backward`
//! accumulates parameter gradients into the store and returns the input gradient.

use rand::Rng;

use crate::params::{ParamId, ParamStore};
use crate::tensor::{gemm, Op};

#[derive(Clone, Debug)]
pub struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
    pub input: usize,
    pub output: usize,
}

impl Linear {
    /// Weights drawn from N(0, 1/input) unless `std` is given.
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        output: usize,
        bias: bool,
        std: Option<f64>,
        rng: &mut impl Rng,
    ) -> Linear {
        let std = std.unwrap_or(1.0 / (input as f64).sqrt());
        let w = if std == 0.0 {
            store.zeros(&format!("{name}.w"), &[input, output])
        } else {
            store.normal(&format!("{name}.w"), &[input, output], std, rng)
        };
        let b = bias.then(|| store.zeros(&format!("{name}.b"), &[output]));
        Linear { w, b, input, output }
    }

    /// `x` is rows x input.
    pub fn forward(&self, store: &ParamStore, x: &[f64], rows: usize) -> Vec<f64> {
        debug_assert_eq!(x.len(), rows * self.input);
        let mut y = match self.b {
            Some(b) => {
                let bias = store.get(b);
                let mut y = Vec::with_capacity(rows * self.output);
                for _ in 0..rows {
                    y.extend_from_slice(bias);
                }
                y
            }
            None => vec![0.0; rows * self.output],
        };
        let beta = if self.b.is_some() { 1.0 } else { 0.0 };
        gemm(rows, self.input, self.output, x, Op::N, store.get(self.w), Op::N, beta, &mut y);
        y
    }

    pub fn backward(&self, store: &mut ParamStore, x: &[f64], rows: usize, dy: &[f64]) -> Vec<f64> {
        let (inp, out) = (self.input, self.output);
        gemm(inp, rows, out, x, Op::T, dy, Op::N, 1.0, store.grad_mut(self.w));
        if let Some(b) = self.b {
            let db = store.grad_mut(b);
            for r in 0..rows {
                for (g, d) in db.iter_mut().zip(&dy[r * out..(r + 1) * out]) {
                    *g += d;
                }
            }
        }
        let mut dx = vec![0.0; rows * inp];
        gemm(rows, out, inp, dy, Op::N, store.get(self.w), Op::T, 0.0, &mut dx);
        dx
    }
}

#[derive(Clone, Debug)]
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub dim: usize,
    pub eps: f64,
}

pub struct LayerNormCache {
    xhat: Vec<f64>,
    rstd: Vec<f64>,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize) -> LayerNorm {
        LayerNorm {
            gamma: store.constant(&format!("{name}.gamma"), &[dim], 1.0),
            beta: store.zeros(&format!("{name}.beta"), &[dim]),
            dim,
            eps: 1e-5,
        }
    }

    pub fn forward(&self, store: &ParamStore, x: &[f64]) -> (Vec<f64>, LayerNormCache) {
        let d = self.dim;
        let rows = x.len() / d;
        let (g, b) = (store.get(self.gamma), store.get(self.beta));
        let mut y = vec![0.0; x.len()];
        let mut xhat = vec![0.0; x.len()];
        let mut rstd = vec![0.0; rows];
        for r in 0..rows {
            let row = &x[r * d..(r + 1) * d];
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let rs = 1.0 / (var + self.eps).sqrt();
            rstd[r] = rs;
            for i in 0..d {
                let h = (row[i] - mean) * rs;
                xhat[r * d + i] = h;
                y[r * d + i] = h * g[i] + b[i];
            }
        }
        (y, LayerNormCache { xhat, rstd })
    }

    pub fn backward(&self, store: &mut ParamStore, cache: &LayerNormCache, dy: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let rows = dy.len() / d;
        {
            let dg = store.grad_mut(self.gamma);
            for r in 0..rows {
                for i in 0..d {
                    dg[i] += dy[r * d + i] * cache.xhat[r * d + i];
                }
            }
            let db = store.grad_mut(self.beta);
            for r in 0..rows {
                for i in 0..d {
                    db[i] += dy[r * d + i];
                }
            }
        }
        let g = store.get(self.gamma);
        let mut dx = vec![0.0; dy.len()];
        for r in 0..rows {
            let mut sum_dh = 0.0;
            let mut sum_dh_h = 0.0;
            for i in 0..d {
                let dh = dy[r * d + i] * g[i];
                sum_dh += dh;
                sum_dh_h += dh * cache.xhat[r * d + i];
            }
            let rs = cache.rstd[r];
            for i in 0..d {
                let dh = dy[r * d + i] * g[i];
                let h = cache.xhat[r * d + i];
                dx[r * d + i] = rs * (dh - sum_dh / d as f64 - h * sum_dh_h / d as f64);
            }
        }
        dx
    }
}

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Tanh approximation of GELU.
pub fn gelu(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| 0.5 * v * (1.0 + (SQRT_2_OVER_PI * (v + 0.044715 * v * v * v)).tanh()))
        .collect()
}

pub fn gelu_backward(x: &[f64], dy: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(dy)
        .map(|(&v, &d)| {
            let u = SQRT_2_OVER_PI * (v + 0.044715 * v * v * v);
            let t = u.tanh();
            let du = SQRT_2_OVER_PI * (1.0 + 3.0 * 0.044715 * v * v);
            d * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Embedding {
    pub table: ParamId,
    pub vocab: usize,
    pub dim: usize,
}

impl Embedding {
    pub fn new(store: &mut ParamStore, name: &str, vocab: usize, dim: usize, std: f64, rng: &mut impl Rng) -> Embedding {
        Embedding {
            table: store.normal(name, &[vocab, dim], std, rng),
            vocab,
            dim,
        }
    }

    pub fn forward(&self, store: &ParamStore, ids: &[usize]) -> Vec<f64> {
        let t = store.get(self.table);
        let mut out = Vec::with_capacity(ids.len() * self.dim);
        for &i in ids {
            out.extend_from_slice(&t[i * self.dim..(i + 1) * self.dim]);
        }
        out
    }

    pub fn backward(&self, store: &mut ParamStore, ids: &[usize], dy: &[f64]) {
        let d = self.dim;
        let g = store.grad_mut(self.table);
        for (r, &i) in ids.iter().enumerate() {
            for k in 0..d {
                g[i * d + k] += dy[r * d + k];
            }
        }
    }
}

/// Two-layer perceptron with a GELU in between.
#[derive(Clone, Debug)]
pub struct Mlp {
    pub fc1: Linear,
    pub fc2: Linear,
}

pub struct MlpCache {
    x: Vec<f64>,
    pre: Vec<f64>,
    act: Vec<f64>,
}

impl Mlp {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        hidden: usize,
        output: usize,
        out_std: Option<f64>,
        rng: &mut impl Rng,
    ) -> Mlp {
        Mlp {
            fc1: Linear::new(store, &format!("{name}.fc1"), input, hidden, true, None, rng),
            fc2: Linear::new(store, &format!("{name}.fc2"), hidden, output, true, out_std, rng),
        }
    }

    pub fn forward(&self, store: &ParamStore, x: &[f64], rows: usize) -> (Vec<f64>, MlpCache) {
        let pre = self.fc1.forward(store, x, rows);
        let act = gelu(&pre);
        let y = self.fc2.forward(store, &act, rows);
        (
            y,
            MlpCache {
                x: x.to_vec(),
                pre,
                act,
            },
        )
    }

    pub fn backward(&self, store: &mut ParamStore, cache: &MlpCache, rows: usize, dy: &[f64]) -> Vec<f64> {
        let dact = self.fc2.backward(store, &cache.act, rows, dy);
        let dpre = gelu_backward(&cache.pre, &dact);
        self.fc1.backward(store, &cache.x, rows, &dpre)
    }
}
