//! 9x9 (and 2..19) Go rules: positional superko, no suicide, Tromp-Taylor scoring.

mod board;
mod record;
mod types;
pub mod zobrist;

pub use board::{new_game, BoardState, EndReason, GameResult, Winner, DEFAULT_KOMI};
pub use record::{replay, AnnotatedMove, GameRecord, Source};
pub use types::{Cell, Color, Move, Verdict};
