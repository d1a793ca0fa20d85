//! Per-position metrics. Agents are queried with a one-element history holding
//! the test position (its internal hash history still enforces superko).

use gobench_core::agent::Agent;
use gobench_core::go::{AnnotatedMove, BoardState, Move};
use serde::{Deserialize, Serialize};

use crate::EvalError;

/// `hits` out of `total`, reported as a percentage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Count {
    pub hits: usize,
    pub total: usize,
}

impl Count {
    pub fn percent(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.hits as f64 * 100.0 / self.total as f64
        }
    }
}

/// Share of positions where the agent's raw proposal (before any fallback) was legal.
pub fn legal_rate(agent: &mut dyn Agent, states: &[BoardState]) -> Result<Count, EvalError> {
    if states.is_empty() {
        return Err(EvalError::NoStates);
    }
    let mut hits = 0;
    for s in states {
        let d = agent.decide(std::slice::from_ref(s))?;
        if d.raw_legal && s.is_legal(d.mv).is_legal() {
            hits += 1;
        }
    }
    Ok(Count {
        hits,
        total: states.len(),
    })
}

/// Share of positions where the agent plays the annotated best move.
pub fn action_accuracy(agent: &mut dyn Agent, states: &[(BoardState, AnnotatedMove)]) -> Result<Count, EvalError> {
    if states.is_empty() {
        return Err(EvalError::NoStates);
    }
    let mut hits = 0;
    for (s, a) in states {
        if agent.decide(std::slice::from_ref(s))?.mv == a.best {
            hits += 1;
        }
    }
    Ok(Count {
        hits,
        total: states.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueRatio {
    /// Mean of `value(chosen) / value(best)`, as a percentage.
    pub percent: f64,
    pub counted: usize,
    /// Moves skipped because the best move's value is zero.
    pub excluded: usize,
}

pub fn action_value_ratio(moves: &[(Move, AnnotatedMove)]) -> Result<ValueRatio, EvalError> {
    let mut sum = 0.0;
    let mut counted = 0;
    let mut excluded = 0;
    for (chosen, a) in moves {
        let best = a.value_of(a.best).ok_or(EvalError::MissingValue(a.best))?;
        let v = a.value_of(*chosen).ok_or(EvalError::MissingValue(*chosen))?;
        if best == 0.0 {
            excluded += 1;
            continue;
        }
        sum += v / best;
        counted += 1;
    }
    if counted == 0 {
        return Err(EvalError::NoStates);
    }
    Ok(ValueRatio {
        percent: sum / counted as f64 * 100.0,
        counted,
        excluded,
    })
}

/// Plays the agent on every annotated position and scores its moves by value ratio.
pub fn agent_value_ratio(agent: &mut dyn Agent, states: &[(BoardState, AnnotatedMove)]) -> Result<ValueRatio, EvalError> {
    let mut moves = Vec::with_capacity(states.len());
    for (s, a) in states {
        moves.push((agent.decide(std::slice::from_ref(s))?.mv, a.clone()));
    }
    action_value_ratio(&moves)
}
