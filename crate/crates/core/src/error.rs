use thiserror::Error;

use crate::go::Verdict;

#[derive(Debug, Error, PartialEq)]
pub enum GoError {
    #[error("board size {0} outside 2..=19")]
    BadSize(usize),
    #[error("illegal move: {0}")]
    IllegalMove(Verdict),
    #[error("illegal move at index {index}: {verdict}")]
    IllegalMoveAt { index: usize, verdict: Verdict },
    #[error("move at index {index} played after the game ended")]
    MoveAfterEnd { index: usize },
    #[error("game is over")]
    GameOver,
    #[error("bad board grid: {0}")]
    BadGrid(String),
    #[error("bad move text {0:?}")]
    BadMoveText(String),
    #[error("bad annotation: {0}")]
    BadAnnotation(String),
}
