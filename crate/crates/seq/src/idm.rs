//! Learned inverse dynamics for code-bearing generation: a small perceptron
//! reads the current board and the generated latent codes and classifies the
//! move over the empty points plus pass. Like the frame diff, it can only
//! ever name an empty intersection.

use gobench_core::go::{BoardState, Cell, Color, Move};
use gobench_nn::{adamw_step, cross_entropy, AdamConfig, AdamState, Embedding, Mlp, ParamStore};
use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::SeqError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodeIdmConfig {
    pub embed: usize,
    pub hidden: usize,
    pub batch_size: usize,
    pub steps: u64,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for CodeIdmConfig {
    fn default() -> Self {
        let steps = 3000;
        CodeIdmConfig {
            embed: 16,
            hidden: 128,
            batch_size: 64,
            steps,
            adam: AdamConfig {
                lr: 2e-3,
                max_steps: steps,
                ..AdamConfig::ar()
            },
            seed: 0,
        }
    }
}

/// One labelled transition: the board before the move, the codes describing
/// what follows, and the move that was played.
#[derive(Clone, Debug)]
pub struct IdmExample {
    pub state: BoardState,
    pub codes: Vec<usize>,
    pub mv: Move,
}

#[derive(Clone, Debug)]
pub struct CodeIdm {
    pub size: usize,
    pub horizon: usize,
    pub codebook: usize,
    embed_dim: usize,
    hidden: usize,
    pub store: ParamStore,
    embed: Embedding,
    mlp: Mlp,
}

const SHUFFLE_SALT: u64 = 0x1d_c0de;
const OCCUPIED: f64 = -1e9;

impl CodeIdm {
    pub fn new(size: usize, horizon: usize, codebook: usize, config: &CodeIdmConfig) -> CodeIdm {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let embed = Embedding::new(&mut store, "idm.codes", codebook, config.embed, 1.0, &mut rng);
        let input = 3 * size * size + horizon * config.embed;
        let mlp = Mlp::new(&mut store, "idm.mlp", input, config.hidden, size * size + 1, None, &mut rng);
        CodeIdm {
            size,
            horizon,
            codebook,
            embed_dim: config.embed,
            hidden: config.hidden,
            store,
            embed,
            mlp,
        }
    }

    pub fn save(&self, out: &mut impl std::io::Write) -> Result<(), SeqError> {
        let meta = serde_json::json!({
            "kind": "idm",
            "size": self.size,
            "horizon": self.horizon,
            "codebook": self.codebook,
            "embed": self.embed_dim,
            "hidden": self.hidden,
        });
        Ok(gobench_nn::checkpoint::write_checkpoint(out, &self.store, meta)?)
    }

    pub fn load(input: &mut impl std::io::Read) -> Result<CodeIdm, SeqError> {
        let (loaded, meta) = gobench_nn::checkpoint::read_checkpoint(input)?;
        let field = |k: &str| {
            meta[k]
                .as_u64()
                .map(|v| v as usize)
                .ok_or_else(|| SeqError::Spec(format!("checkpoint metadata lacks {k}")))
        };
        if meta["kind"] != "idm" {
            return Err(SeqError::Spec("not an inverse-dynamics checkpoint".into()));
        }
        let config = CodeIdmConfig {
            embed: field("embed")?,
            hidden: field("hidden")?,
            ..CodeIdmConfig::default()
        };
        let mut idm = CodeIdm::new(field("size")?, field("horizon")?, field("codebook")?, &config);
        gobench_nn::checkpoint::load_into(&mut idm.store, &loaded)?;
        Ok(idm)
    }

    fn classes(&self) -> usize {
        self.size * self.size + 1
    }

    fn check(&self, state: &BoardState, codes: &[usize]) -> Result<(), SeqError> {
        if state.size() != self.size || codes.len() != self.horizon {
            return Err(SeqError::Shape(format!(
                "inverse dynamics expects a {0}x{0} board and {1} codes, got {2}x{2} and {3}",
                self.size,
                self.horizon,
                state.size(),
                codes.len()
            )));
        }
        if let Some(&c) = codes.iter().find(|&&c| c >= self.codebook) {
            return Err(SeqError::Shape(format!("code {c} outside codebook of {}", self.codebook)));
        }
        Ok(())
    }

    /// Board as own / opponent / empty indicators from the mover's side.
    fn board_features(state: &BoardState) -> Vec<f64> {
        let own = match state.to_move() {
            Color::Black => Cell::Black,
            Color::White => Cell::White,
        };
        let mut out = Vec::with_capacity(3 * state.cells().len());
        for &c in state.cells() {
            let k = if c == own {
                0
            } else if c == Cell::Empty {
                2
            } else {
                1
            };
            out.extend((0..3).map(|j| (j == k) as u8 as f64));
        }
        out
    }

    fn target(&self, mv: Move) -> usize {
        mv.index(self.size).unwrap_or(self.size * self.size)
    }

    /// Occupied points get a logit far below any reachable value.
    fn mask_occupied(state: &BoardState, logits: &mut [f64]) {
        for (l, c) in logits.iter_mut().zip(state.cells()) {
            if *c != Cell::Empty {
                *l = OCCUPIED;
            }
        }
    }

    pub fn logits(&self, state: &BoardState, codes: &[usize]) -> Result<Vec<f64>, SeqError> {
        self.check(state, codes)?;
        let mut x = Self::board_features(state);
        x.extend(self.embed.forward(&self.store, codes));
        let mut logits = self.mlp.forward(&self.store, &x, 1).0;
        Self::mask_occupied(state, &mut logits);
        Ok(logits)
    }

    /// Most likely move; legality is left to the caller.
    pub fn predict(&self, state: &BoardState, codes: &[usize]) -> Result<Move, SeqError> {
        let logits = self.logits(state, codes)?;
        let best = logits
            .iter()
            .enumerate()
            .fold(0, |b, (i, &v)| if v > logits[b] { i } else { b });
        Ok(if best == self.size * self.size {
            Move::Pass
        } else {
            Move::from_index(best, self.size)
        })
    }

    /// Fits the classifier with cross-entropy. Returns the per-step batch loss.
    pub fn train(&mut self, examples: &[IdmExample], config: &CodeIdmConfig) -> Result<Vec<f64>, SeqError> {
        if examples.is_empty() {
            return Err(SeqError::EmptyCorpus);
        }
        config.adam.validate()?;
        for e in examples {
            self.check(&e.state, &e.codes)?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_SALT);
        let mut order: Vec<usize> = (0..examples.len()).collect();
        order.shuffle(&mut rng);
        let mut cursor = 0;
        let batch = config.batch_size.max(1);
        let mut adam = AdamState::new(&self.store);
        let mut losses = Vec::with_capacity(config.steps as usize);
        for step in 1..=config.steps {
            let mut x = Vec::new();
            let mut ids = Vec::with_capacity(batch * self.horizon);
            let mut states = Vec::with_capacity(batch);
            let mut targets = Vec::with_capacity(batch);
            for _ in 0..batch {
                if cursor == order.len() {
                    order.shuffle(&mut rng);
                    cursor = 0;
                }
                let e = &examples[order[cursor]];
                cursor += 1;
                x.extend(Self::board_features(&e.state));
                x.extend(self.embed.forward(&self.store, &e.codes));
                ids.extend_from_slice(&e.codes);
                states.push(&e.state);
                targets.push(self.target(e.mv));
            }
            self.store.zero_grad();
            let (mut logits, cache) = self.mlp.forward(&self.store, &x, batch);
            for (row, s) in logits.chunks_mut(self.classes()).zip(&states) {
                Self::mask_occupied(s, row);
            }
            let (loss, dlogits) = cross_entropy(&logits, self.classes(), &targets, &vec![true; batch])?;
            if !loss.is_finite() {
                return Err(SeqError::NonFinite { step, loss });
            }
            let dx = self.mlp.backward(&mut self.store, &cache, batch, &dlogits);
            let board = 3 * self.size * self.size;
            let width = board + self.horizon * self.embed.dim;
            let dcodes: Vec<f64> = dx.chunks(width).flat_map(|row| row[board..].iter().copied()).collect();
            self.embed.backward(&mut self.store, &ids, &dcodes);
            adamw_step(&mut self.store, &mut adam, &config.adam)?;
            losses.push(loss);
            if step % 500 == 0 || step == config.steps {
                info!("idm step {step}: loss {loss:.5}");
            }
        }
        Ok(losses)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gobench_core::go::new_game;

    #[test]
    fn features_are_relative_to_the_mover() {
        let s = new_game(3, 7.0).unwrap().play(Move::place(0, 0)).unwrap();
        let f = CodeIdm::board_features(&s);
        // White to move: the black stone is the opponent's.
        assert_eq!(&f[..3], &[0.0, 1.0, 0.0]);
        assert_eq!(&f[3..6], &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn checkpoint_round_trip() {
        let config = CodeIdmConfig {
            embed: 4,
            hidden: 8,
            seed: 3,
            ..CodeIdmConfig::default()
        };
        let idm = CodeIdm::new(3, 2, 8, &config);
        let mut bytes = Vec::new();
        idm.save(&mut bytes).unwrap();
        let back = CodeIdm::load(&mut bytes.as_slice()).unwrap();
        let s = new_game(3, 7.0).unwrap();
        assert_eq!(back.logits(&s, &[1, 2]).unwrap(), idm.logits(&s, &[1, 2]).unwrap());
    }

    #[test]
    fn never_names_an_occupied_point() {
        let idm = CodeIdm::new(3, 1, 4, &CodeIdmConfig::default());
        let mut s = new_game(3, 7.0).unwrap();
        for i in [0, 4, 8, 2, 6, 1, 3] {
            s = s.play(Move::from_index(i, 3)).unwrap();
            for c in 0..4 {
                if let Some(i) = idm.predict(&s, &[c]).unwrap().index(3) {
                    assert_eq!(s.cells()[i], Cell::Empty);
                }
            }
        }
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let idm = CodeIdm::new(3, 2, 8, &CodeIdmConfig::default());
        let s = new_game(3, 7.0).unwrap();
        assert!(idm.predict(&s, &[0]).is_err());
        assert!(idm.predict(&s, &[0, 8]).is_err());
        assert!(idm.predict(&new_game(5, 7.0).unwrap(), &[0, 1]).is_err());
        assert!(idm.predict(&s, &[0, 7]).is_ok());
    }
}
