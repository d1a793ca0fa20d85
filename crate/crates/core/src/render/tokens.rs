use serde::{Deserialize, Serialize};

use super::frame::{Frame, RenderSpec, BLACK, WHITE};
use super::RenderError;
use crate::go::{BoardState, Cell};

pub const TOKEN_EMPTY: u32 = 0;
pub const TOKEN_BLACK: u32 = 1;
pub const TOKEN_WHITE: u32 = 2;
/// Frame tokens occupy `[0, FRAME_TOKENS)`.
pub const FRAME_TOKENS: u32 = 3;

pub fn cell_token(cell: Cell) -> u32 {
    match cell {
        Cell::Empty => TOKEN_EMPTY,
        Cell::Black => TOKEN_BLACK,
        Cell::White => TOKEN_WHITE,
    }
}

pub fn token_cell(token: u32) -> Option<Cell> {
    match token {
        TOKEN_EMPTY => Some(Cell::Empty),
        TOKEN_BLACK => Some(Cell::Black),
        TOKEN_WHITE => Some(Cell::White),
        _ => None,
    }
}

/// Board-aligned symbolic frame: one token per intersection, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenGrid {
    pub size: usize,
    pub tokens: Vec<u32>,
}

impl TokenGrid {
    pub fn empty(size: usize) -> TokenGrid {
        TokenGrid {
            size,
            tokens: vec![TOKEN_EMPTY; size * size],
        }
    }

    pub fn get(&self, col: usize, row: usize) -> u32 {
        self.tokens[row * self.size + col]
    }

    /// Number of differing cells.
    pub fn diff_count(&self, other: &TokenGrid) -> usize {
        self.tokens.iter().zip(&other.tokens).filter(|(a, b)| a != b).count()
    }
}

pub fn tokenize_state(state: &BoardState) -> TokenGrid {
    TokenGrid {
        size: state.size(),
        tokens: state.cells().iter().map(|&c| cell_token(c)).collect(),
    }
}

/// Classifies each intersection by the pixel at `sample_offset` below-right of its center.
pub fn tokenize_frame(frame: &Frame, spec: &RenderSpec, board_size: usize) -> Result<TokenGrid, RenderError> {
    if frame.width != spec.image_size || frame.height != spec.image_size {
        return Err(RenderError::FrameSize {
            width: frame.width,
            height: frame.height,
        });
    }
    let off = spec.sample_offset();
    let mut tokens = Vec::with_capacity(board_size * board_size);
    for row in 0..board_size {
        for col in 0..board_size {
            let x = spec.coord(board_size, col) + off;
            let y = spec.coord(board_size, row) + off;
            let px = frame.get(x, y);
            let token = if px == spec.background {
                TOKEN_EMPTY
            } else if px == BLACK {
                TOKEN_BLACK
            } else if px == WHITE {
                TOKEN_WHITE
            } else {
                return Err(RenderError::UnrecognizedCell { col, row, pixel: px });
            };
            tokens.push(token);
        }
    }
    Ok(TokenGrid { size: board_size, tokens })
}

/// Stone configuration (row-major cells) encoded by `grid`.
pub fn grid_to_position(grid: &TokenGrid) -> Result<Vec<Cell>, RenderError> {
    grid.tokens
        .iter()
        .enumerate()
        .map(|(i, &t)| token_cell(t).ok_or(RenderError::TokenOutOfRegion { index: i, token: t }))
        .collect()
}
