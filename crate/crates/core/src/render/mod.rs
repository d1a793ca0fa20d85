//! Board rendering, the symbolic frame tokenizer and move extraction.

mod frame;
mod idm;
mod tokens;

use thiserror::Error;

pub use frame::{render, Frame, RenderSpec, Rgb, BACKGROUND, BLACK, MARKER, WHITE};
pub use idm::extract_move;
pub use tokens::{
    cell_token, grid_to_position, token_cell, tokenize_frame, tokenize_state, TokenGrid, FRAME_TOKENS,
    TOKEN_BLACK, TOKEN_EMPTY, TOKEN_WHITE,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RenderError {
    #[error("frame is {width}x{height}, not the render spec size")]
    FrameSize { width: u32, height: u32 },
    #[error("cell ({col},{row}) has unrecognized color {pixel:?}")]
    UnrecognizedCell { col: usize, row: usize, pixel: Rgb },
    #[error("token {token} at {index} is outside the frame-token region")]
    TokenOutOfRegion { index: usize, token: u32 },
    #[error("grids differ in size")]
    SizeMismatch,
    #[error("{candidates} candidate placements")]
    Ambiguous { candidates: usize },
    #[error("board change is not explained by one legal move")]
    InconsistentCaptures,
}
