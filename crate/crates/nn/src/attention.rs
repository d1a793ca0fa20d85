//! Scaled dot-product attention with exact backward, plus a multi-head layer
//! with learned projections.

use rand::Rng;

use crate::layers::Linear;
use crate::params::ParamStore;
use crate::tensor::gemm_strided;
use crate::NnError;

/// Which keys each query may see.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mask {
    None,
    /// Query `i` sees keys `0..=i + (keys - queries)`; with a key cache the
    /// queries are the trailing positions.
    Causal,
    /// Query `i` sees keys `0..limits[i]`.
    Limits(Vec<usize>),
}

impl Mask {
    fn limit(&self, i: usize, t: usize, s: usize) -> usize {
        match self {
            Mask::None => s,
            Mask::Causal => (i + 1 + s - t).min(s),
            Mask::Limits(l) => l[i].min(s),
        }
    }
}

/// Shapes of one attention call: `t` queries, `s` keys, model width `d` split into `heads`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AttnShape {
    pub t: usize,
    pub s: usize,
    pub d: usize,
    pub heads: usize,
}

impl AttnShape {
    fn dh(&self) -> usize {
        self.d / self.heads
    }

    fn check(&self, q: &[f64], k: &[f64], v: &[f64], mask: &Mask) -> Result<(), NnError> {
        if self.heads == 0 || self.d % self.heads != 0 {
            return Err(NnError::Shape(format!("width {} not divisible by {} heads", self.d, self.heads)));
        }
        if q.len() != self.t * self.d || k.len() != self.s * self.d || v.len() != self.s * self.d {
            return Err(NnError::Shape(format!(
                "attention operands {}/{}/{} do not match t={} s={} d={}",
                q.len(),
                k.len(),
                v.len(),
                self.t,
                self.s,
                self.d
            )));
        }
        if matches!(mask, Mask::Causal) && self.t > self.s {
            return Err(NnError::Shape("causal mask needs at least as many keys as queries".into()));
        }
        if let Mask::Limits(l) = mask {
            if l.len() != self.t {
                return Err(NnError::Shape("mask limits must have one entry per query".into()));
            }
        }
        Ok(())
    }
}

/// `softmax(Q Kᵀ / sqrt(dh)) V` per head. Returns the output (t x d) and the
/// attention probabilities (heads x t x s). A query that sees no key gets zeros.
pub fn attention(
    q: &[f64],
    k: &[f64],
    v: &[f64],
    shape: AttnShape,
    mask: &Mask,
) -> Result<(Vec<f64>, Vec<f64>), NnError> {
    shape.check(q, k, v, mask)?;
    let AttnShape { t, s, d, heads } = shape;
    let dh = shape.dh();
    let scale = 1.0 / (dh as f64).sqrt();
    let mut probs = vec![0.0; heads * t * s];
    let mut out = vec![0.0; t * d];
    for h in 0..heads {
        let p = &mut probs[h * t * s..(h + 1) * t * s];
        // scores = Q_h K_hᵀ
        gemm_strided(t, dh, s, &q[h * dh..], d, 1, &k[h * dh..], 1, d, 0.0, p, s, 1);
        for i in 0..t {
            let lim = mask.limit(i, t, s);
            let row = &mut p[i * s..(i + 1) * s];
            if lim == 0 {
                row.fill(0.0);
                continue;
            }
            let mut max = f64::NEG_INFINITY;
            for x in &row[..lim] {
                max = max.max(*x * scale);
            }
            let mut sum = 0.0;
            for x in &mut row[..lim] {
                *x = (*x * scale - max).exp();
                sum += *x;
            }
            for x in &mut row[..lim] {
                *x /= sum;
            }
            row[lim..].fill(0.0);
        }
        gemm_strided(t, s, dh, p, s, 1, &v[h * dh..], d, 1, 0.0, &mut out[h * dh..], d, 1);
    }
    Ok((out, probs))
}

/// Gradients `(dq, dk, dv)` of [`attention`] given the output gradient.
pub fn attention_backward(
    q: &[f64],
    k: &[f64],
    v: &[f64],
    probs: &[f64],
    dout: &[f64],
    shape: AttnShape,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let AttnShape { t, s, d, heads } = shape;
    let dh = shape.dh();
    let scale = 1.0 / (dh as f64).sqrt();
    let mut dq = vec![0.0; t * d];
    let mut dk = vec![0.0; s * d];
    let mut dv = vec![0.0; s * d];
    let mut dp = vec![0.0; t * s];
    for h in 0..heads {
        let p = &probs[h * t * s..(h + 1) * t * s];
        // dV_h = Pᵀ dO_h
        gemm_strided(s, t, dh, p, 1, s, &dout[h * dh..], d, 1, 0.0, &mut dv[h * dh..], d, 1);
        // dP = dO_h V_hᵀ
        gemm_strided(t, dh, s, &dout[h * dh..], d, 1, &v[h * dh..], 1, d, 0.0, &mut dp, s, 1);
        // dS = P ⊙ (dP − rowsum(dP ⊙ P)), then scaled
        for i in 0..t {
            let pr = &p[i * s..(i + 1) * s];
            let dr = &mut dp[i * s..(i + 1) * s];
            let dot: f64 = pr.iter().zip(dr.iter()).map(|(a, b)| a * b).sum();
            for (x, &pp) in dr.iter_mut().zip(pr) {
                *x = pp * (*x - dot) * scale;
            }
        }
        gemm_strided(t, s, dh, &dp, s, 1, &k[h * dh..], d, 1, 0.0, &mut dq[h * dh..], d, 1);
        gemm_strided(s, t, dh, &dp, 1, s, &q[h * dh..], d, 1, 0.0, &mut dk[h * dh..], d, 1);
    }
    (dq, dk, dv)
}

/// Multi-head attention with query/key/value/output projections.
#[derive(Clone, Debug)]
pub struct MultiHeadAttention {
    pub wq: Linear,
    pub wk: Linear,
    pub wv: Linear,
    pub wo: Linear,
    pub heads: usize,
    pub dim: usize,
}

pub struct MhaCache {
    xq: Vec<f64>,
    xk: Vec<f64>,
    xv: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    probs: Vec<f64>,
    ctx: Vec<f64>,
    shape: AttnShape,
}

impl MhaCache {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

impl MultiHeadAttention {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        dim: usize,
        heads: usize,
        out_std: Option<f64>,
        rng: &mut impl Rng,
    ) -> MultiHeadAttention {
        MultiHeadAttention {
            wq: Linear::new(store, &format!("{name}.q"), dim, dim, true, None, rng),
            wk: Linear::new(store, &format!("{name}.k"), dim, dim, true, None, rng),
            wv: Linear::new(store, &format!("{name}.v"), dim, dim, true, None, rng),
            wo: Linear::new(store, &format!("{name}.o"), dim, dim, true, out_std, rng),
            heads,
            dim,
        }
    }

    /// Queries from `xq` (t x dim) attend over keys/values projected from `xkv` (s x dim).
    pub fn forward(
        &self,
        store: &ParamStore,
        xq: &[f64],
        xkv: &[f64],
        mask: &Mask,
    ) -> Result<(Vec<f64>, MhaCache), NnError> {
        self.forward_kv(store, xq, xkv, xkv, mask)
    }

    /// Like [`MultiHeadAttention::forward`] with separate key and value inputs.
    pub fn forward_kv(
        &self,
        store: &ParamStore,
        xq: &[f64],
        xk: &[f64],
        xv: &[f64],
        mask: &Mask,
    ) -> Result<(Vec<f64>, MhaCache), NnError> {
        let t = xq.len() / self.dim;
        let s = xk.len() / self.dim;
        if xv.len() != xk.len() {
            return Err(NnError::Shape("key and value inputs differ in length".into()));
        }
        let q = self.wq.forward(store, xq, t);
        let k = self.wk.forward(store, xk, s);
        let v = self.wv.forward(store, xv, s);
        let shape = AttnShape {
            t,
            s,
            d: self.dim,
            heads: self.heads,
        };
        let (ctx, probs) = attention(&q, &k, &v, shape, mask)?;
        let y = self.wo.forward(store, &ctx, t);
        Ok((
            y,
            MhaCache {
                xq: xq.to_vec(),
                xk: xk.to_vec(),
                xv: xv.to_vec(),
                q,
                k,
                v,
                probs,
                ctx,
                shape,
            },
        ))
    }

    /// Returns `(dxq, dxkv)`.
    pub fn backward(&self, store: &mut ParamStore, cache: &MhaCache, dy: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (dxq, mut dxk, dxv) = self.backward_kv(store, cache, dy);
        crate::tensor::add_assign(&mut dxk, &dxv);
        (dxq, dxk)
    }

    /// Returns `(dxq, dxk, dxv)`.
    pub fn backward_kv(&self, store: &mut ParamStore, cache: &MhaCache, dy: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let AttnShape { t, s, .. } = cache.shape;
        let dctx = self.wo.backward(store, &cache.ctx, t, dy);
        let (dq, dk, dv) = attention_backward(&cache.q, &cache.k, &cache.v, &cache.probs, &dctx, cache.shape);
        let dxq = self.wq.backward(store, &cache.xq, t, &dq);
        let dxk = self.wk.backward(store, &cache.xk, s, &dk);
        let dxv = self.wv.backward(store, &cache.xv, s, &dv);
        (dxq, dxk, dxv)
    }
}
