//! Forward and hand-derived backward of the latent dynamics model.
//!
//! Layout conventions: a frame is `P` patches of `p` values (patch-major);
//! encoder features are kept position-major (`row = s * W + k`) for the
//! per-position temporal attention and frame-major (`row = k * P + s`) for
//! the horizon queries, whose visible prefix is then a contiguous row range.

use gobench_nn::attention::MhaCache;
use gobench_nn::layers::{LayerNormCache, MlpCache};
use gobench_nn::{gelu, gelu_backward, mse, FsqMode, LayerNorm, Linear, Mask, Mlp, MultiHeadAttention, ParamId, ParamStore};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::LdmConfig;
use crate::LdmError;

/// Window `[x_t, …, x_{t+H}]` for 1-based `t`, replicating the last frame.
pub fn pad_window(clip: &[Vec<f64>], t: usize, horizon: usize) -> Result<Vec<Vec<f64>>, LdmError> {
    if t == 0 || t > clip.len() {
        return Err(LdmError::WindowIndex { t, len: clip.len() });
    }
    Ok((0..=horizon).map(|k| clip[(t - 1 + k).min(clip.len() - 1)].clone()).collect())
}

#[derive(Clone, Debug)]
pub struct Ldm {
    pub config: LdmConfig,
    pub store: ParamStore,
    patch: Linear,
    pos: ParamId,
    time: ParamId,
    enc_ln: LayerNorm,
    enc_attn: MultiHeadAttention,
    queries: ParamId,
    image_pe: ParamId,
    cross: MultiHeadAttention,
    head_ln: LayerNorm,
    head: Mlp,
    slot: ParamId,
    decoder: Mlp,
    decoder_out: Option<Mlp>,
}

/// Everything one window produces.
#[derive(Clone, Debug, PartialEq)]
pub struct LdmOutput {
    /// Encoder features, frame-major: `(H+1) x P x d`.
    pub features: Vec<f64>,
    /// Pre-quantization vectors, one per horizon step.
    pub z_cont: Vec<Vec<f64>>,
    /// Quantized lattice values (bounded values in relaxed mode).
    pub codes: Vec<Vec<f64>>,
    pub indices: Vec<usize>,
    /// Predicted frames `x_{t+1..t+H}`.
    pub recon: Vec<Vec<f64>>,
    pub loss: f64,
}

pub struct LdmCache {
    x: Vec<f64>,
    enc_ln: LayerNormCache,
    enc_attn: Vec<MhaCache>,
    cross: MhaCache,
    head_ln: LayerNormCache,
    head: MlpCache,
    dcode_dz: Vec<Vec<f64>>,
    decoder: MlpCache,
    decoder_out: Option<(Vec<f64>, MlpCache)>,
    dloss: Vec<f64>,
}

struct Encoded {
    /// Position-major features.
    fs: Vec<f64>,
    x: Vec<f64>,
    ln: LayerNormCache,
    attn: Vec<MhaCache>,
}

impl Ldm {
    pub fn new(config: LdmConfig) -> Result<Ldm, LdmError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let (d, p, pp, w, h, cd) = (
            config.dim,
            config.patch_len(),
            config.positions(),
            config.window_len(),
            config.horizon,
            config.code_dim(),
        );
        // Each patch is embedded together with its change since the previous frame.
        let patch = Linear::new(&mut store, "enc.patch", 2 * p, d, true, None, &mut rng);
        let pos = store.normal("enc.pos", &[pp, d], 0.02, &mut rng);
        let time = store.normal("enc.time", &[w, d], 0.02, &mut rng);
        let enc_ln = LayerNorm::new(&mut store, "enc.ln", d);
        let enc_attn = MultiHeadAttention::new(&mut store, "enc.attn", d, config.heads, None, &mut rng);
        let queries = store.normal("qf.queries", &[h, d], 1.0, &mut rng);
        let image_pe = store.normal("qf.image_pe", &[pp, d], 0.02, &mut rng);
        let cross = MultiHeadAttention::new(&mut store, "qf.cross", d, config.heads, None, &mut rng);
        let head_ln = LayerNorm::new(&mut store, "qf.ln", d);
        let head = Mlp::new(&mut store, "qf.head", d, config.head_hidden, cd, None, &mut rng);
        let slot = store.normal("dec.slot", &[h, d], 0.02, &mut rng);
        let dh = config.decoder_hidden;
        let (decoder, decoder_out) = if config.decoder_layers == 2 {
            (
                Mlp::new(&mut store, "dec.mlp", d + h * cd, dh, dh, None, &mut rng),
                Some(Mlp::new(&mut store, "dec.out", dh, dh, p, None, &mut rng)),
            )
        } else {
            (Mlp::new(&mut store, "dec.mlp", d + h * cd, dh, p, None, &mut rng), None)
        };
        Ok(Ldm {
            config,
            store,
            patch,
            pos,
            time,
            enc_ln,
            enc_attn,
            queries,
            image_pe,
            cross,
            head_ln,
            head,
            slot,
            decoder,
            decoder_out,
        })
    }

    fn check_window(&self, window: &[Vec<f64>]) -> Result<(), LdmError> {
        let w = self.config.window_len();
        let f = self.config.frame_len();
        if window.len() != w || window.iter().any(|x| x.len() != f) {
            return Err(LdmError::Shape(format!(
                "expected {w} frames of {f} values, got {} frames",
                window.len()
            )));
        }
        Ok(())
    }

    fn encode_frames(&self, store: &ParamStore, window: &[Vec<f64>]) -> Result<Encoded, LdmError> {
        let c = &self.config;
        let (d, p, pp, w) = (c.dim, c.patch_len(), c.positions(), c.window_len());
        let mut x = Vec::with_capacity(w * pp * 2 * p);
        for s in 0..pp {
            for (k, frame) in window.iter().enumerate() {
                let cur = &frame[s * p..(s + 1) * p];
                x.extend_from_slice(cur);
                match k {
                    0 => x.extend(std::iter::repeat_n(0.0, p)),
                    _ => x.extend(cur.iter().zip(&window[k - 1][s * p..(s + 1) * p]).map(|(a, b)| a - b)),
                }
            }
        }
        let mut e = self.patch.forward(store, &x, w * pp);
        let (pos, time) = (store.get(self.pos), store.get(self.time));
        for s in 0..pp {
            for k in 0..w {
                let row = &mut e[(s * w + k) * d..(s * w + k + 1) * d];
                for i in 0..d {
                    row[i] += pos[s * d + i] + time[k * d + i];
                }
            }
        }
        let (normed, ln) = self.enc_ln.forward(store, &e);
        let mut attn = Vec::with_capacity(pp);
        for s in 0..pp {
            let seq = &normed[s * w * d..(s + 1) * w * d];
            let (y, cache) = self.enc_attn.forward(store, seq, seq, &Mask::Causal)?;
            for (a, b) in e[s * w * d..(s + 1) * w * d].iter_mut().zip(&y) {
                *a += b;
            }
            attn.push(cache);
        }
        Ok(Encoded { fs: e, x, ln, attn })
    }

    fn frame_major(&self, fs: &[f64]) -> Vec<f64> {
        let c = &self.config;
        let (d, pp, w) = (c.dim, c.positions(), c.window_len());
        let mut fk = vec![0.0; fs.len()];
        for s in 0..pp {
            for k in 0..w {
                fk[(k * pp + s) * d..(k * pp + s + 1) * d].copy_from_slice(&fs[(s * w + k) * d..(s * w + k + 1) * d]);
            }
        }
        fk
    }

    /// Decoder input rows `(h, s)`: first-frame feature plus a horizon slot
    /// embedding, followed by the codes of steps `1..=h` (later steps zeroed).
    fn decoder_input(&self, store: &ParamStore, fs: &[f64], codes: &[Vec<f64>]) -> Vec<f64> {
        let c = &self.config;
        let (d, pp, w, h, cd) = (c.dim, c.positions(), c.window_len(), c.horizon, c.code_dim());
        let width = d + h * cd;
        let slot = store.get(self.slot);
        let mut inp = vec![0.0; h * pp * width];
        for hh in 0..h {
            for s in 0..pp {
                let row = &mut inp[(hh * pp + s) * width..(hh * pp + s + 1) * width];
                let f0 = &fs[s * w * d..s * w * d + d];
                for i in 0..d {
                    row[i] = f0[i] + slot[hh * d + i];
                }
                for (j, code) in codes.iter().enumerate().take(hh + 1) {
                    row[d + j * cd..d + (j + 1) * cd].copy_from_slice(code);
                }
            }
        }
        inp
    }

    fn decode(&self, store: &ParamStore, inp: &[f64]) -> (Vec<f64>, MlpCache, Option<(Vec<f64>, MlpCache)>) {
        let rows = self.config.horizon * self.config.positions();
        let (y, cache) = self.decoder.forward(store, inp, rows);
        match &self.decoder_out {
            Some(out) => {
                let (recon, out_cache) = out.forward(store, &gelu(&y), rows);
                (recon, cache, Some((y, out_cache)))
            }
            None => (y, cache, None),
        }
    }

    fn add_skip(&self, recon: &mut [f64], first: &[f64]) {
        if self.config.first_frame_skip {
            for frame in recon.chunks_mut(first.len()) {
                frame.iter_mut().zip(first).for_each(|(r, x)| *r += x);
            }
        }
    }

    fn split_frames(&self, flat: &[f64]) -> Vec<Vec<f64>> {
        flat.chunks(self.config.frame_len()).map(|c| c.to_vec()).collect()
    }

    pub fn forward(&self, window: &[Vec<f64>], mode: FsqMode) -> Result<(LdmOutput, LdmCache), LdmError> {
        self.forward_in(&self.store, window, mode)
    }

    /// Forward pass against an explicit parameter store (same layout as `self.store`).
    pub fn forward_in(
        &self,
        store: &ParamStore,
        window: &[Vec<f64>],
        mode: FsqMode,
    ) -> Result<(LdmOutput, LdmCache), LdmError> {
        self.check_window(window)?;
        let c = &self.config;
        let (d, pp, h) = (c.dim, c.positions(), c.horizon);
        let enc = self.encode_frames(store, window)?;
        let fk = self.frame_major(&enc.fs);

        let pe = store.get(self.image_pe);
        let mut keys = fk.clone();
        for (r, row) in keys.chunks_mut(d).enumerate() {
            let s = r % pp;
            for i in 0..d {
                row[i] += pe[s * d + i];
            }
        }
        let limits = Mask::Limits((1..=h).map(|hh| (hh + 1) * pp).collect());
        let q = store.get(self.queries);
        let (att, cross) = self.cross.forward_kv(store, q, &keys, &fk, &limits)?;
        let a: Vec<f64> = q.iter().zip(&att).map(|(x, y)| x + y).collect();
        let (normed, head_ln) = self.head_ln.forward(store, &a);
        let (zflat, head) = self.head.forward(store, &normed, h);

        let cd = c.code_dim();
        let mut z_cont = Vec::with_capacity(h);
        let mut codes = Vec::with_capacity(h);
        let mut normalized = Vec::with_capacity(h);
        let mut indices = Vec::with_capacity(h);
        let mut dcode_dz = Vec::with_capacity(h);
        for zh in zflat.chunks(cd) {
            let out = c.fsq.quantize(zh, mode)?;
            normalized.push(c.fsq.normalize(&out.code));
            z_cont.push(zh.to_vec());
            codes.push(out.code);
            indices.push(out.index);
            dcode_dz.push(out.dcode_dz);
        }

        let inp = self.decoder_input(store, &enc.fs, &normalized);
        let (mut recon, decoder, decoder_out) = self.decode(store, &inp);
        self.add_skip(&mut recon, &window[0]);
        let target: Vec<f64> = window[1..].concat();
        let (loss, dloss) = mse(&recon, &target)?;
        Ok((
            LdmOutput {
                features: fk,
                z_cont,
                codes,
                indices,
                recon: self.split_frames(&recon),
                loss,
            },
            LdmCache {
                x: enc.x,
                enc_ln: enc.ln,
                enc_attn: enc.attn,
                cross,
                head_ln,
                head,
                dcode_dz,
                decoder,
                decoder_out,
                dloss,
            },
        ))
    }

    /// Accumulates `scale * d(loss)/d(params)` into the store's gradients.
    /// Rounding is passed straight through.
    pub fn backward(&mut self, cache: &LdmCache, scale: f64) {
        let mut store = std::mem::take(&mut self.store);
        self.backward_in(&mut store, cache, scale);
        self.store = store;
    }

    pub fn backward_in(&self, store: &mut ParamStore, cache: &LdmCache, scale: f64) {
        let c = &self.config;
        let (d, pp, w, h, cd) = (c.dim, c.positions(), c.window_len(), c.horizon, c.code_dim());
        let width = d + h * cd;

        let drecon: Vec<f64> = cache.dloss.iter().map(|g| g * scale).collect();
        let dinp = match (&self.decoder_out, &cache.decoder_out) {
            (Some(out), Some((mid, out_cache))) => {
                let dact = out.backward(store, out_cache, h * pp, &drecon);
                let dmid = gelu_backward(mid, &dact);
                self.decoder.backward(store, &cache.decoder, h * pp, &dmid)
            }
            _ => self.decoder.backward(store, &cache.decoder, h * pp, &drecon),
        };

        let mut dfs = vec![0.0; w * pp * d];
        let mut dcodes = vec![vec![0.0; cd]; h];
        {
            let dslot = store.grad_mut(self.slot);
            for hh in 0..h {
                for s in 0..pp {
                    let row = &dinp[(hh * pp + s) * width..(hh * pp + s + 1) * width];
                    for i in 0..d {
                        dfs[s * w * d + i] += row[i];
                        dslot[hh * d + i] += row[i];
                    }
                    for (j, dc) in dcodes.iter_mut().enumerate().take(hh + 1) {
                        for i in 0..cd {
                            dc[i] += row[d + j * cd + i];
                        }
                    }
                }
            }
        }
        let norm = c.fsq.normalize_scale();
        let mut dz = Vec::with_capacity(h * cd);
        for (dc, deriv) in dcodes.iter().zip(&cache.dcode_dz) {
            for i in 0..cd {
                dz.push(dc[i] * norm[i] * deriv[i]);
            }
        }

        let dnormed = self.head.backward(store, &cache.head, h, &dz);
        let da = self.head_ln.backward(store, &cache.head_ln, &dnormed);
        let (dq, dkeys, dvals) = self.cross.backward_kv(store, &cache.cross, &da);
        {
            let gq = store.grad_mut(self.queries);
            for i in 0..h * d {
                gq[i] += da[i] + dq[i];
            }
        }
        {
            let gpe = store.grad_mut(self.image_pe);
            for k in 0..w {
                for s in 0..pp {
                    let r = k * pp + s;
                    for i in 0..d {
                        gpe[s * d + i] += dkeys[r * d + i];
                        dfs[(s * w + k) * d + i] += dkeys[r * d + i] + dvals[r * d + i];
                    }
                }
            }
        }

        let mut dnorm_in = vec![0.0; w * pp * d];
        for s in 0..pp {
            let span = s * w * d..(s + 1) * w * d;
            let (dxq, dxkv) = self.enc_attn.backward(store, &cache.enc_attn[s], &dfs[span.clone()]);
            for (o, (a, b)) in dnorm_in[span].iter_mut().zip(dxq.iter().zip(&dxkv)) {
                *o = a + b;
            }
        }
        let mut de = self.enc_ln.backward(store, &cache.enc_ln, &dnorm_in);
        gobench_nn::tensor::add_assign(&mut de, &dfs);
        {
            let gpos = store.grad_mut(self.pos);
            for s in 0..pp {
                for k in 0..w {
                    for i in 0..d {
                        gpos[s * d + i] += de[(s * w + k) * d + i];
                    }
                }
            }
            let gtime = store.grad_mut(self.time);
            for s in 0..pp {
                for k in 0..w {
                    for i in 0..d {
                        gtime[k * d + i] += de[(s * w + k) * d + i];
                    }
                }
            }
        }
        self.patch.backward(store, &cache.x, w * pp, &de);
    }

    /// Latent indices and pre-quantization vectors for every step of a clip.
    pub fn encode(&self, clip: &[Vec<f64>]) -> Result<LatentCodeSet, LdmError> {
        let mut indices = Vec::with_capacity(clip.len());
        let mut z_cont = Vec::with_capacity(clip.len());
        for t in 1..=clip.len() {
            let window = pad_window(clip, t, self.config.horizon)?;
            let (out, _) = self.forward(&window, FsqMode::Quantize)?;
            indices.push(out.indices);
            z_cont.push(out.z_cont);
        }
        Ok(LatentCodeSet { indices, z_cont })
    }

    /// Decoder-only pass: frames the model predicts from `first_frame` under
    /// the given code indices (one per horizon step).
    pub fn decode_probe(&self, first_frame: &[f64], indices: &[usize]) -> Result<Vec<Vec<f64>>, LdmError> {
        let c = &self.config;
        if indices.len() != c.horizon {
            return Err(LdmError::Shape(format!("expected {} code indices, got {}", c.horizon, indices.len())));
        }
        let window = vec![first_frame.to_vec(); c.window_len()];
        self.check_window(&window)?;
        let mut normalized = Vec::with_capacity(indices.len());
        for &i in indices {
            normalized.push(c.fsq.normalize(&c.fsq.index_to_code(i)?));
        }
        // Frame 0 sees only itself, so its features match any training window.
        let enc = self.encode_frames(&self.store, &window)?;
        let inp = self.decoder_input(&self.store, &enc.fs, &normalized);
        let (mut recon, _, _) = self.decode(&self.store, &inp);
        self.add_skip(&mut recon, first_frame);
        Ok(self.split_frames(&recon))
    }
}

/// Codes for one clip: `indices[t][h]` and the matching pre-quantization vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentCodeSet {
    pub indices: Vec<Vec<usize>>,
    pub z_cont: Vec<Vec<Vec<f64>>>,
}

impl LatentCodeSet {
    /// CSV rows `clip,t,h,index,z0,z1,…` with 1-based `t` and `h`.
    pub fn write_csv(&self, clip_id: usize, header: bool, out: &mut impl std::io::Write) -> std::io::Result<()> {
        if header {
            let dims = self.z_cont.first().and_then(|r| r.first()).map_or(0, |z| z.len());
            let z: Vec<String> = (0..dims).map(|i| format!("z{i}")).collect();
            writeln!(out, "clip,t,h,index{}{}", if dims > 0 { "," } else { "" }, z.join(","))?;
        }
        for (t, (row, zs)) in self.indices.iter().zip(&self.z_cont).enumerate() {
            for (h, (idx, z)) in row.iter().zip(zs).enumerate() {
                let z: Vec<String> = z.iter().map(|v| format!("{v}")).collect();
                writeln!(out, "{clip_id},{},{},{idx},{}", t + 1, h + 1, z.join(","))?;
            }
        }
        Ok(())
    }
}
