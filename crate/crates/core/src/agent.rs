//! Move-selection interface shared by baselines, learned models and engines.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::go::{BoardState, Cell, Color, Move};
use crate::gtp::{GtpError, GtpSession};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("engine failure: {0}")]
    Engine(#[from] GtpError),
    #[error("{0}")]
    Other(String),
}

/// A chosen move together with whether the agent's raw proposal was legal
/// before any fallback substitution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decision {
    pub mv: Move,
    pub raw_legal: bool,
}

impl Decision {
    pub fn legal(mv: Move) -> Decision {
        Decision { mv, raw_legal: true }
    }
}

pub trait Agent {
    fn name(&self) -> String;

    /// Called before every game with that game's private seed.
    fn reset(&mut self, _seed: u64) {}

    /// `history[0]` is the empty board; the last element is the position to move in.
    fn decide(&mut self, history: &[BoardState]) -> Result<Decision, AgentError>;
}

fn current(history: &[BoardState]) -> &BoardState {
    history.last().expect("history holds at least the initial position")
}

/// Uniformly random legal placement; passes only when none remain.
#[derive(Clone, Debug)]
pub struct RandomAgent {
    name: String,
    rng: ChaCha8Rng,
    pass_probability: f64,
}

impl RandomAgent {
    pub fn new(name: &str) -> RandomAgent {
        RandomAgent {
            name: name.to_string(),
            rng: ChaCha8Rng::seed_from_u64(0),
            pass_probability: 0.0,
        }
    }

    pub fn with_pass_probability(mut self, p: f64) -> RandomAgent {
        self.pass_probability = p;
        self
    }
}

/// Random legal placement via rejection over a shuffled point list, which
/// avoids enumerating every legal move.
pub fn random_legal_move(state: &BoardState, rng: &mut impl Rng) -> Move {
    let n = state.size();
    let mut points: Vec<usize> = (0..n * n).filter(|&i| state.cells()[i] == Cell::Empty).collect();
    points.shuffle(rng);
    points
        .into_iter()
        .map(|i| Move::from_index(i, n))
        .find(|&m| state.is_legal(m).is_legal())
        .unwrap_or(Move::Pass)
}

impl Agent for RandomAgent {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn decide(&mut self, history: &[BoardState]) -> Result<Decision, AgentError> {
        let state = current(history);
        if self.pass_probability > 0.0 && self.rng.gen_bool(self.pass_probability) {
            return Ok(Decision::legal(Move::Pass));
        }
        Ok(Decision::legal(random_legal_move(state, &mut self.rng)))
    }
}

/// Always proposes an occupied point (or Pass on an empty board); used to
/// exercise legality accounting.
#[derive(Clone, Debug, Default)]
pub struct OccupiedAgent;

impl Agent for OccupiedAgent {
    fn name(&self) -> String {
        "occupied".into()
    }

    fn decide(&mut self, history: &[BoardState]) -> Result<Decision, AgentError> {
        let state = current(history);
        match state.cells().iter().position(|c| *c != Cell::Empty) {
            Some(i) => {
                let fallback = state.legal_moves().ok().and_then(|m| m.first().copied()).unwrap_or(Move::Pass);
                let raw = Move::from_index(i, state.size());
                debug_assert!(!state.is_legal(raw).is_legal());
                Ok(Decision {
                    mv: fallback,
                    raw_legal: false,
                })
            }
            None => Ok(Decision::legal(Move::Pass)),
        }
    }
}

/// Heuristic teacher: capture as much as possible, rescue own groups in
/// atari, put opponent groups in atari, otherwise play near the last move and
/// the centre. Never fills its own single-point eyes; passes when nothing
/// else is left. With probability `epsilon` plays a random non-eye move.
#[derive(Clone, Debug)]
pub struct GreedyCaptureTeacher {
    pub epsilon: f64,
    rng: ChaCha8Rng,
}

impl GreedyCaptureTeacher {
    pub fn new(epsilon: f64) -> GreedyCaptureTeacher {
        GreedyCaptureTeacher {
            epsilon,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    /// The deterministic greedy choice (no exploration).
    pub fn best_move(state: &BoardState) -> Move {
        Self::candidates(state)
            .into_iter()
            .max_by_key(|&(score, idx)| (score, std::cmp::Reverse(idx)))
            .map(|(_, idx)| Move::from_index(idx, state.size()))
            .unwrap_or(Move::Pass)
    }

    /// Scored legal non-eye placements.
    fn candidates(state: &BoardState) -> Vec<(i64, usize)> {
        let n = state.size();
        let me = state.to_move();
        let mut out = Vec::new();
        for idx in 0..n * n {
            if state.cells()[idx] != Cell::Empty || is_own_eye(state, idx, me) {
                continue;
            }
            let mv = Move::from_index(idx, n);
            let Some(captured) = state.captures_of(mv) else {
                continue;
            };
            let Ok(next) = state.play(mv) else { continue };
            let mut score = 1000 * captured.len() as i64;
            let own_libs = liberties_of(&next, idx);
            if own_libs == 1 && captured.is_empty() {
                score -= 500;
            }
            // Rescue: an own group adjacent to idx was in atari and no longer is.
            for q in neighbors(n, idx) {
                if state.cells()[q] == me.cell() && liberties_of(state, q) == 1 && own_libs >= 2 {
                    score += 300;
                }
            }
            // Atari: adjacent opponent groups left with one liberty.
            for q in neighbors(n, idx) {
                if next.cells()[q] == me.opponent().cell() && liberties_of(&next, q) == 1 {
                    score += 100;
                }
            }
            if let Some(Move::Place { col, row }) = state.last_move() {
                let (c, r) = (idx % n, idx / n);
                let d = c.abs_diff(col as usize) + r.abs_diff(row as usize);
                if d <= 2 {
                    score += 20 - 5 * d as i64;
                }
            }
            let (c, r) = ((idx % n) as i64, (idx / n) as i64);
            let center = (n as i64 - 1) as f64 / 2.0;
            score -= ((c as f64 - center).abs() + (r as f64 - center).abs()).round() as i64;
            out.push((score, idx));
        }
        out
    }
}

impl Agent for GreedyCaptureTeacher {
    fn name(&self) -> String {
        format!("greedy-capture(eps={})", self.epsilon)
    }

    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn decide(&mut self, history: &[BoardState]) -> Result<Decision, AgentError> {
        let state = current(history);
        if self.epsilon > 0.0 && self.rng.gen_bool(self.epsilon) {
            let cands = Self::candidates(state);
            if let Some(&(_, idx)) = cands.choose(&mut self.rng) {
                return Ok(Decision::legal(Move::from_index(idx, state.size())));
            }
        }
        Ok(Decision::legal(Self::best_move(state)))
    }
}

fn neighbors(n: usize, i: usize) -> impl Iterator<Item = usize> {
    let (c, r) = (i % n, i / n);
    [
        (r > 0).then(|| i - n),
        (r + 1 < n).then(|| i + n),
        (c > 0).then(|| i - 1),
        (c + 1 < n).then(|| i + 1),
    ]
    .into_iter()
    .flatten()
}

/// Empty point whose neighbours are all `color` stones.
pub fn is_own_eye(state: &BoardState, idx: usize, color: Color) -> bool {
    neighbors(state.size(), idx).all(|q| state.cells()[q] == color.cell())
}

/// Liberty count of the group at `idx` (0 for an empty point).
pub fn liberties_of(state: &BoardState, idx: usize) -> usize {
    let n = state.size();
    let cells = state.cells();
    let color = cells[idx];
    if color == Cell::Empty {
        return 0;
    }
    let mut seen = vec![false; n * n];
    let mut libs = vec![false; n * n];
    let mut stack = vec![idx];
    seen[idx] = true;
    while let Some(p) = stack.pop() {
        for q in neighbors(n, p) {
            if cells[q] == Cell::Empty {
                libs[q] = true;
            } else if cells[q] == color && !seen[q] {
                seen[q] = true;
                stack.push(q);
            }
        }
    }
    libs.iter().filter(|&&l| l).count()
}

/// Plays through an external GTP engine, replaying the full move list each turn.
pub struct GtpAgent {
    name: String,
    session: GtpSession,
}

impl GtpAgent {
    pub fn new(name: &str, session: GtpSession) -> GtpAgent {
        GtpAgent {
            name: name.to_string(),
            session,
        }
    }
}

impl Agent for GtpAgent {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn decide(&mut self, history: &[BoardState]) -> Result<Decision, AgentError> {
        let state = current(history);
        let moves: Vec<Move> = history.iter().skip(1).filter_map(|s| s.last_move()).collect();
        self.session.setup_moves(state.size(), state.komi(), &moves)?;
        let mv = self.session.genmove(state.to_move(), state.size())?;
        let raw_legal = mv == Move::Resign || state.is_legal(mv).is_legal();
        Ok(Decision { mv, raw_legal })
    }
}
