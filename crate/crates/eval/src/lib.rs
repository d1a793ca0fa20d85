//! Evaluation protocol: per-position metrics, round-robin tournaments,
//! anchored Bradley-Terry ratings, dataset statistics and report tables.

pub mod elo;
pub mod metrics;
pub mod report;
pub mod stats;
pub mod tournament;

use gobench_core::agent::AgentError;
use gobench_core::go::Move;
use gobench_core::GoError;
use thiserror::Error;

pub use elo::{expected_score, fit_elo, fit_results, Rating, RatingTable, Tally};
pub use metrics::{action_accuracy, action_value_ratio, agent_value_ratio, legal_rate, Count, ValueRatio};
pub use report::{AgentRow, MetricsReport};
pub use stats::{dataset_stats, reference_hashes, DatasetStats};
pub use tournament::{play_game, run_tournament, MatchResult, TournamentConfig};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no states to evaluate")]
    NoStates,
    #[error("no action value recorded for {0:?}")]
    MissingValue(Move),
    #[error("tournament needs at least two agents, got {0}")]
    TooFewAgents(usize),
    #[error("unknown agent {0:?}")]
    UnknownAgent(String),
    #[error("results graph is disconnected")]
    Disconnected,
    #[error("some agents won or lost every game against the rest; ratings diverge")]
    Unbounded,
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Go(#[from] GoError),
}
