use gobench_core::agent::Agent;
use gobench_core::go::zobrist::derive_seed;
use gobench_core::go::{new_game, BoardState, Color, EndReason, GameResult, Move, Winner};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::EvalError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub black: String,
    pub white: String,
    pub result: GameResult,
    pub moves: Vec<Move>,
    /// Whether each move was the mover's raw (pre-fallback) choice.
    pub raw_legal: Vec<bool>,
    /// Position hash after each move.
    pub hashes: Vec<u64>,
    pub seed: u64,
}

impl MatchResult {
    /// Points scored by Black (1, 0.5 or 0).
    pub fn black_score(&self) -> f64 {
        match self.result.winner {
            Winner::Black => 1.0,
            Winner::Draw => 0.5,
            Winner::White => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TournamentConfig {
    pub games_per_pair: usize,
    pub seed: u64,
    pub move_cap: usize,
    pub board_size: usize,
    pub komi: f64,
}

impl Default for TournamentConfig {
    fn default() -> Self {
        TournamentConfig {
            games_per_pair: 400,
            seed: 0,
            move_cap: 200,
            board_size: 9,
            komi: gobench_core::go::DEFAULT_KOMI,
        }
    }
}

/// Plays one game. Agent errors forfeit the game; a move the engine rejects
/// loses it; games reaching `move_cap` are scored as they stand.
pub fn play_game(
    black: &mut dyn Agent,
    white: &mut dyn Agent,
    size: usize,
    komi: f64,
    move_cap: usize,
    seed: u64,
) -> Result<MatchResult, EvalError> {
    black.reset(derive_seed(seed, 1));
    white.reset(derive_seed(seed, 2));
    let mut history: Vec<BoardState> = vec![new_game(size, komi)?];
    let mut moves = Vec::new();
    let mut raw_legal = Vec::new();
    let mut hashes = Vec::new();
    let result = loop {
        let state = history.last().expect("non-empty");
        if state.is_over() {
            break match state.resigned() {
                Some(c) => GameResult::by_default(c.opponent(), EndReason::Resign),
                None => state.score(komi),
            };
        }
        if moves.len() >= move_cap {
            break state.score(komi);
        }
        let mover = state.to_move();
        let agent: &mut dyn Agent = if mover == Color::Black { &mut *black } else { &mut *white };
        let decision = match agent.decide(&history) {
            Ok(d) => d,
            Err(e) => {
                warn!("{} forfeits: {e}", agent.name());
                break GameResult::by_default(mover.opponent(), EndReason::Forfeit);
            }
        };
        match state.play(decision.mv) {
            Ok(next) => {
                moves.push(decision.mv);
                raw_legal.push(decision.raw_legal);
                hashes.push(next.hash());
                history.push(next);
            }
            Err(e) => {
                warn!("{} played an illegal move: {e}", agent.name());
                break GameResult::by_default(mover.opponent(), EndReason::IllegalMove);
            }
        }
    };
    Ok(MatchResult {
        black: black.name(),
        white: white.name(),
        result,
        moves,
        raw_legal,
        hashes,
        seed,
    })
}

/// Every unordered pair plays `games_per_pair` games, alternating colours with
/// the lexicographically first agent taking Black in even-numbered games.
pub fn run_tournament(agents: &mut [Box<dyn Agent>], config: &TournamentConfig) -> Result<Vec<MatchResult>, EvalError> {
    if agents.len() < 2 {
        return Err(EvalError::TooFewAgents(agents.len()));
    }
    let mut order: Vec<usize> = (0..agents.len()).collect();
    order.sort_by_key(|&i| agents[i].name());
    let mut results = Vec::with_capacity(agents.len() * (agents.len() - 1) / 2 * config.games_per_pair);
    let mut pair = 0u64;
    for a in 0..order.len() {
        for b in a + 1..order.len() {
            let (i, j) = (order[a], order[b]);
            let pair_seed = derive_seed(config.seed, pair);
            pair += 1;
            for g in 0..config.games_per_pair {
                let (bi, wi) = if g % 2 == 0 { (i, j) } else { (j, i) };
                let (black, white) = two_mut(agents, bi, wi);
                results.push(play_game(
                    black.as_mut(),
                    white.as_mut(),
                    config.board_size,
                    config.komi,
                    config.move_cap,
                    derive_seed(pair_seed, g as u64),
                )?);
            }
        }
    }
    Ok(results)
}

fn two_mut<T>(v: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    assert_ne!(i, j);
    if i < j {
        let (lo, hi) = v.split_at_mut(j);
        (&mut lo[i], &mut hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(i);
        (&mut hi[0], &mut lo[j])
    }
}
