//! Test-set curation: annotated positions past the opening, deduplicated by
//! position hash.

use std::collections::HashSet;

use anyhow::{bail, Result};
use gobench_core::go::{AnnotatedMove, BoardState, GameRecord, Move};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurationConfig {
    /// Positions with fewer stones on the board are treated as opening and dropped.
    pub min_stones: usize,
    /// Number of states to keep (`None` keeps all of them).
    pub target: Option<usize>,
    pub dedup: bool,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            min_stones: 10,
            target: None,
            dedup: true,
        }
    }
}

/// A test position, stored as the move prefix that reaches it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestState {
    pub game: usize,
    pub ply: usize,
    pub size: usize,
    pub komi: f64,
    pub moves: Vec<Move>,
    pub hash: u64,
    pub annotation: AnnotatedMove,
}

impl TestState {
    pub fn state(&self) -> Result<BoardState> {
        let mut s = BoardState::new(self.size, self.komi)?;
        for &m in &self.moves {
            s.apply(m)?;
        }
        Ok(s)
    }
}

/// Walks games in order and keeps the first occurrence of each qualifying
/// position. With a target, a seeded sample of that size is taken and
/// returned in walk order.
pub fn curate(records: &[GameRecord], config: &CurationConfig, seed: u64) -> Result<Vec<TestState>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (g, r) in records.iter().enumerate() {
        let Some(ann) = &r.annotations else { continue };
        let states = r.replay()?;
        for (ply, a) in ann.iter().enumerate() {
            let s = &states[ply];
            let stones = s.cells().iter().filter(|c| c.color().is_some()).count();
            if stones < config.min_stones || s.is_over() {
                continue;
            }
            if config.dedup && !seen.insert(s.hash()) {
                continue;
            }
            out.push(TestState {
                game: g,
                ply,
                size: r.size,
                komi: r.komi,
                moves: r.moves[..ply].to_vec(),
                hash: s.hash(),
                annotation: a.clone(),
            });
        }
    }
    if let Some(n) = config.target {
        if out.len() < n {
            bail!("only {} qualifying states, {} requested", out.len(), n);
        }
        let mut keep = sample(&mut ChaCha8Rng::seed_from_u64(seed), out.len(), n).into_vec();
        keep.sort_unstable();
        out = keep.into_iter().map(|i| out[i].clone()).collect();
    }
    Ok(out)
}
