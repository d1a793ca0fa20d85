use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::board::{BoardState, DEFAULT_KOMI};
use super::types::Move;
use crate::error::GoError;

/// Where a game came from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    #[default]
    Human,
    Selfplay,
    Synthetic,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Human => "human",
            Source::Selfplay => "selfplay",
            Source::Synthetic => "synthetic",
        }
    }

    pub fn parse(s: &str) -> Option<Source> {
        match s {
            "human" => Some(Source::Human),
            "selfplay" => Some(Source::Selfplay),
            "synthetic" => Some(Source::Synthetic),
            _ => None,
        }
    }
}

/// The played move of a position together with oracle values for the player to move.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedMove {
    pub played: Move,
    pub best: Move,
    pub action_values: BTreeMap<Move, f64>,
}

impl AnnotatedMove {
    /// Validates that every value lies in [0, 1] and that `best` attains the maximum.
    pub fn new(played: Move, best: Move, action_values: BTreeMap<Move, f64>) -> Result<AnnotatedMove, GoError> {
        let annotated = AnnotatedMove {
            played,
            best,
            action_values,
        };
        annotated.validate()?;
        Ok(annotated)
    }

    pub fn validate(&self) -> Result<(), GoError> {
        if let Some((mv, v)) = self.action_values.iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(GoError::BadAnnotation(format!("value {v} for {mv} outside [0, 1]")));
        }
        let max = self.action_values.values().cloned().fold(f64::NEG_INFINITY, f64::max);
        match self.action_values.get(&self.best) {
            Some(&v) if v >= max => Ok(()),
            Some(&v) => Err(GoError::BadAnnotation(format!(
                "best move {} has value {v} below maximum {max}",
                self.best
            ))),
            None => Err(GoError::BadAnnotation(format!("best move {} has no value", self.best))),
        }
    }

    pub fn value_of(&self, mv: Move) -> Option<f64> {
        self.action_values.get(&mv).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub size: usize,
    pub komi: f64,
    #[serde(default)]
    pub source: Source,
    pub moves: Vec<Move>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<Vec<AnnotatedMove>>,
}

impl GameRecord {
    pub fn new(size: usize, komi: f64, source: Source, moves: Vec<Move>) -> GameRecord {
        GameRecord {
            size,
            komi,
            source,
            moves,
            annotations: None,
        }
    }

    pub fn with_default_komi(size: usize, moves: Vec<Move>) -> GameRecord {
        GameRecord::new(size, DEFAULT_KOMI, Source::Synthetic, moves)
    }

    pub fn validate(&self) -> Result<(), GoError> {
        if let Some(ann) = &self.annotations {
            if ann.len() != self.moves.len() {
                return Err(GoError::BadAnnotation(format!(
                    "{} annotations for {} moves",
                    ann.len(),
                    self.moves.len()
                )));
            }
            for a in ann {
                a.validate()?;
            }
        }
        Ok(())
    }

    /// Every position of the game: `states[0]` is the empty board and
    /// `states[i + 1]` follows `moves[i]`.
    pub fn replay(&self) -> Result<Vec<BoardState>, GoError> {
        let mut states = Vec::with_capacity(self.moves.len() + 1);
        let mut state = BoardState::new(self.size, self.komi)?;
        states.push(state.clone());
        for (index, &mv) in self.moves.iter().enumerate() {
            match state.apply(mv) {
                Ok(()) => states.push(state.clone()),
                Err(GoError::IllegalMove(verdict)) => return Err(GoError::IllegalMoveAt { index, verdict }),
                Err(GoError::GameOver) => return Err(GoError::MoveAfterEnd { index }),
                Err(e) => return Err(e),
            }
        }
        Ok(states)
    }

    /// Final position only, without materializing intermediate states.
    pub fn final_state(&self) -> Result<BoardState, GoError> {
        let mut state = BoardState::new(self.size, self.komi)?;
        for (index, &mv) in self.moves.iter().enumerate() {
            state.apply(mv).map_err(|e| match e {
                GoError::IllegalMove(verdict) => GoError::IllegalMoveAt { index, verdict },
                GoError::GameOver => GoError::MoveAfterEnd { index },
                other => other,
            })?;
        }
        Ok(state)
    }
}

/// See [`GameRecord::replay`].
pub fn replay(record: &GameRecord) -> Result<Vec<BoardState>, GoError> {
    record.replay()
}
