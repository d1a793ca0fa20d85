//! Pre-LN causal transformer with learned positions and a zero-initialised
//! output projection (uniform predictions before training).

use gobench_nn::attention::MhaCache;
use gobench_nn::layers::{LayerNormCache, MlpCache};
use gobench_nn::{
    attention, cross_entropy, AttnShape, Embedding, LayerNorm, Linear, Mask, Mlp, MultiHeadAttention, ParamStore,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::SeqError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformerConfig {
    pub layers: usize,
    pub dim: usize,
    pub heads: usize,
    pub context: usize,
    pub mlp_hidden: usize,
    pub vocab: usize,
    pub seed: u64,
}

impl Default for TransformerConfig {
    fn default() -> Self {
        TransformerConfig {
            layers: 2,
            dim: 64,
            heads: 4,
            context: 1024,
            mlp_hidden: 256,
            vocab: 0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
struct Block {
    ln1: LayerNorm,
    attn: MultiHeadAttention,
    ln2: LayerNorm,
    mlp: Mlp,
}

#[derive(Clone, Debug)]
pub struct TinyTransformer {
    pub config: TransformerConfig,
    pub store: ParamStore,
    tok: Embedding,
    pos: Embedding,
    blocks: Vec<Block>,
    ln_f: LayerNorm,
    out: Linear,
}

struct BlockCache {
    ln1: LayerNormCache,
    attn: MhaCache,
    ln2: LayerNormCache,
    mlp: MlpCache,
}

pub struct TfCache {
    ids: Vec<usize>,
    blocks: Vec<BlockCache>,
    ln_f: LayerNormCache,
    hidden: Vec<f64>,
    dlogits: Vec<f64>,
}

/// Per-layer keys and values of the tokens consumed so far.
#[derive(Clone, Debug)]
pub struct KvCache {
    keys: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
    len: usize,
}

impl KvCache {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl TinyTransformer {
    pub fn new(config: TransformerConfig) -> Result<TinyTransformer, SeqError> {
        if config.layers == 0 || config.vocab == 0 || config.context == 0 {
            return Err(SeqError::Spec(format!("invalid transformer config {config:?}")));
        }
        if config.heads == 0 || config.dim % config.heads != 0 {
            return Err(SeqError::Spec(format!("dim {} not divisible by {} heads", config.dim, config.heads)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let d = config.dim;
        let tok = Embedding::new(&mut store, "tok", config.vocab, d, 0.02, &mut rng);
        let pos = Embedding::new(&mut store, "pos", config.context, d, 0.02, &mut rng);
        let resid_std = 0.02 / (2.0 * config.layers as f64).sqrt();
        let blocks = (0..config.layers)
            .map(|l| Block {
                ln1: LayerNorm::new(&mut store, &format!("b{l}.ln1"), d),
                attn: MultiHeadAttention::new(&mut store, &format!("b{l}.attn"), d, config.heads, Some(resid_std), &mut rng),
                ln2: LayerNorm::new(&mut store, &format!("b{l}.ln2"), d),
                mlp: Mlp::new(&mut store, &format!("b{l}.mlp"), d, config.mlp_hidden, d, Some(resid_std), &mut rng),
            })
            .collect();
        let ln_f = LayerNorm::new(&mut store, "ln_f", d);
        let out = Linear::new(&mut store, "out", d, config.vocab, true, Some(0.0), &mut rng);
        Ok(TinyTransformer {
            config,
            store,
            tok,
            pos,
            blocks,
            ln_f,
            out,
        })
    }

    fn check_ids(&self, ids: &[u32]) -> Result<Vec<usize>, SeqError> {
        if ids.len() > self.config.context {
            return Err(SeqError::ContextOverflow {
                len: ids.len(),
                context: self.config.context,
            });
        }
        ids.iter()
            .enumerate()
            .map(|(i, &t)| {
                if (t as usize) < self.config.vocab {
                    Ok(t as usize)
                } else {
                    Err(SeqError::TokenOutOfRegion { position: i, token: t })
                }
            })
            .collect()
    }

    /// Logits (`len x vocab`) for every position.
    pub fn logits(&self, ids: &[u32]) -> Result<Vec<f64>, SeqError> {
        Ok(self.run(&self.store, ids)?.0)
    }

    fn run(&self, store: &ParamStore, ids: &[u32]) -> Result<(Vec<f64>, Vec<BlockCache>, LayerNormCache, Vec<f64>, Vec<usize>), SeqError> {
        let ids = self.check_ids(ids)?;
        let n = ids.len();
        let positions: Vec<usize> = (0..n).collect();
        let mut x = self.tok.forward(store, &ids);
        gobench_nn::tensor::add_assign(&mut x, &self.pos.forward(store, &positions));
        let mut caches = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let (h1, ln1) = b.ln1.forward(store, &x);
            let (a, attn) = b.attn.forward(store, &h1, &h1, &Mask::Causal)?;
            gobench_nn::tensor::add_assign(&mut x, &a);
            let (h2, ln2) = b.ln2.forward(store, &x);
            let (m, mlp) = b.mlp.forward(store, &h2, n);
            gobench_nn::tensor::add_assign(&mut x, &m);
            caches.push(BlockCache { ln1, attn, ln2, mlp });
        }
        let (hidden, ln_f) = self.ln_f.forward(store, &x);
        let logits = self.out.forward(store, &hidden, n);
        Ok((logits, caches, ln_f, hidden, ids))
    }

    /// Masked next-token cross-entropy: logits at `i` predict `ids[i + 1]`,
    /// counted when `loss_mask[i + 1]` is set.
    pub fn forward(&self, ids: &[u32], loss_mask: &[bool]) -> Result<(Vec<f64>, f64, TfCache), SeqError> {
        self.forward_in(&self.store, ids, loss_mask)
    }

    pub fn forward_in(
        &self,
        store: &ParamStore,
        ids: &[u32],
        loss_mask: &[bool],
    ) -> Result<(Vec<f64>, f64, TfCache), SeqError> {
        if loss_mask.len() != ids.len() || ids.len() < 2 {
            return Err(SeqError::Shape(format!("{} ids with {} mask entries", ids.len(), loss_mask.len())));
        }
        let (logits, blocks, ln_f, hidden, idx) = self.run(store, ids)?;
        let v = self.config.vocab;
        let n = ids.len();
        let (loss, mut dlogits) = cross_entropy(&logits[..(n - 1) * v], v, &idx[1..], &loss_mask[1..])?;
        dlogits.resize(n * v, 0.0);
        Ok((
            logits,
            loss,
            TfCache {
                ids: idx,
                blocks,
                ln_f,
                hidden,
                dlogits,
            },
        ))
    }

    pub fn backward(&mut self, cache: &TfCache, scale: f64) {
        let mut store = std::mem::take(&mut self.store);
        self.backward_in(&mut store, cache, scale);
        self.store = store;
    }

    /// Accumulates `scale * d(loss)/d(params)`.
    pub fn backward_in(&self, store: &mut ParamStore, cache: &TfCache, scale: f64) {
        let n = cache.ids.len();
        let dlogits: Vec<f64> = cache.dlogits.iter().map(|g| g * scale).collect();
        let dh = self.out.backward(store, &cache.hidden, n, &dlogits);
        let mut dx = self.ln_f.backward(store, &cache.ln_f, &dh);
        for (b, c) in self.blocks.iter().zip(&cache.blocks).rev() {
            let dh2 = b.mlp.backward(store, &c.mlp, n, &dx);
            gobench_nn::tensor::add_assign(&mut dx, &b.ln2.backward(store, &c.ln2, &dh2));
            let (dq, dkv) = b.attn.backward(store, &c.attn, &dx);
            let dh1: Vec<f64> = dq.iter().zip(&dkv).map(|(a, b)| a + b).collect();
            gobench_nn::tensor::add_assign(&mut dx, &b.ln1.backward(store, &c.ln1, &dh1));
        }
        self.tok.backward(store, &cache.ids, &dx);
        let positions: Vec<usize> = (0..n).collect();
        self.pos.backward(store, &positions, &dx);
    }

    pub fn start(&self) -> KvCache {
        KvCache {
            keys: vec![Vec::new(); self.blocks.len()],
            values: vec![Vec::new(); self.blocks.len()],
            len: 0,
        }
    }

    /// Consumes one token and returns the next-token logits.
    pub fn step(&self, cache: &mut KvCache, token: u32) -> Result<Vec<f64>, SeqError> {
        if cache.len >= self.config.context {
            return Err(SeqError::ContextOverflow {
                len: cache.len + 1,
                context: self.config.context,
            });
        }
        if token as usize >= self.config.vocab {
            return Err(SeqError::TokenOutOfRegion {
                position: cache.len,
                token,
            });
        }
        let store = &self.store;
        let d = self.config.dim;
        let mut x = self.tok.forward(store, &[token as usize]);
        gobench_nn::tensor::add_assign(&mut x, &self.pos.forward(store, &[cache.len]));
        for (l, b) in self.blocks.iter().enumerate() {
            let (h1, _) = b.ln1.forward(store, &x);
            let q = b.attn.wq.forward(store, &h1, 1);
            cache.keys[l].extend(b.attn.wk.forward(store, &h1, 1));
            cache.values[l].extend(b.attn.wv.forward(store, &h1, 1));
            let shape = AttnShape {
                t: 1,
                s: cache.len + 1,
                d,
                heads: self.config.heads,
            };
            let (ctx, _) = attention(&q, &cache.keys[l], &cache.values[l], shape, &Mask::None)?;
            gobench_nn::tensor::add_assign(&mut x, &b.attn.wo.forward(store, &ctx, 1));
            let (h2, _) = b.ln2.forward(store, &x);
            gobench_nn::tensor::add_assign(&mut x, &b.mlp.forward(store, &h2, 1).0);
        }
        cache.len += 1;
        let (h, _) = self.ln_f.forward(store, &x);
        Ok(self.out.forward(store, &h, 1))
    }

    pub fn save(&self, out: &mut impl std::io::Write, meta: serde_json::Value) -> Result<(), SeqError> {
        let meta = serde_json::json!({ "kind": "ar", "config": self.config, "meta": meta });
        Ok(gobench_nn::checkpoint::write_checkpoint(out, &self.store, meta)?)
    }

    /// Returns the model and the caller's metadata.
    pub fn load(input: &mut impl std::io::Read) -> Result<(TinyTransformer, serde_json::Value), SeqError> {
        let (loaded, meta) = gobench_nn::checkpoint::read_checkpoint(input)?;
        let config: TransformerConfig = serde_json::from_value(meta["config"].clone())
            .map_err(|e| SeqError::Spec(format!("checkpoint metadata: {e}")))?;
        let mut model = TinyTransformer::new(config)?;
        gobench_nn::checkpoint::load_into(&mut model.store, &loaded)?;
        Ok((model, meta["meta"].clone()))
    }
}
