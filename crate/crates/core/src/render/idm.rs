//! Diff-based inverse dynamics: recover the move between two board frames.

use super::tokens::{cell_token, grid_to_position, TokenGrid, TOKEN_EMPTY};
use super::RenderError;
use crate::go::{BoardState, Color, Move};

/// Pass when the grids agree; otherwise the unique `Empty -> to_move` cell,
/// with every other change checked against the captures that move implies.
pub fn extract_move(before: &TokenGrid, after: &TokenGrid, to_move: Color) -> Result<Move, RenderError> {
    if before.size != after.size || before.tokens.len() != after.tokens.len() {
        return Err(RenderError::SizeMismatch);
    }
    let before_cells = grid_to_position(before)?;
    grid_to_position(after)?;
    if before == after {
        return Ok(Move::Pass);
    }
    let own = cell_token(to_move.cell());
    let opp = cell_token(to_move.opponent().cell());
    let mut placed = Vec::new();
    let mut removed = Vec::new();
    for (i, (&b, &a)) in before.tokens.iter().zip(&after.tokens).enumerate() {
        if a == b {
            continue;
        }
        if b == TOKEN_EMPTY && a == own {
            placed.push(i);
        } else if b == opp && a == TOKEN_EMPTY {
            removed.push(i);
        } else {
            return Err(RenderError::InconsistentCaptures);
        }
    }
    if placed.len() != 1 {
        return Err(RenderError::Ambiguous { candidates: placed.len() });
    }
    let mv = Move::from_index(placed[0], before.size);
    let state = BoardState::from_cells(before.size, 0.0, &before_cells, to_move)
        .map_err(|_| RenderError::InconsistentCaptures)?;
    let mut implied = state.captures_of(mv).ok_or(RenderError::InconsistentCaptures)?;
    implied.sort_unstable();
    if implied != removed {
        return Err(RenderError::InconsistentCaptures);
    }
    Ok(mv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::go::{new_game, BoardState};
    use crate::render::tokenize_state;

    #[test]
    fn identical_is_pass() {
        let g = tokenize_state(&new_game(9, 7.0).unwrap());
        assert_eq!(extract_move(&g, &g, Color::Black).unwrap(), Move::Pass);
    }

    #[test]
    fn two_new_stones_ambiguous() {
        let before = tokenize_state(&new_game(9, 7.0).unwrap());
        let mut after = before.clone();
        after.tokens[0] = 1;
        after.tokens[10] = 1;
        assert_eq!(
            extract_move(&before, &after, Color::Black),
            Err(RenderError::Ambiguous { candidates: 2 })
        );
    }

    #[test]
    fn capture_recovered() {
        let s = BoardState::from_dump(".O...\nOXO..\n.....\n.....\n.....", 7.0, Color::White).unwrap();
        let t = s.play(Move::place(1, 2)).unwrap();
        assert_eq!(
            extract_move(&tokenize_state(&s), &tokenize_state(&t), Color::White).unwrap(),
            Move::place(1, 2)
        );
    }

    #[test]
    fn bogus_capture_rejected() {
        let s = BoardState::from_dump("XO...\n.....\n.....\n.....\n.....", 7.0, Color::White).unwrap();
        let before = tokenize_state(&s);
        let mut after = before.clone();
        after.tokens[0] = TOKEN_EMPTY; // black stone vanishes without being captured
        after.tokens[12] = 2;
        assert_eq!(
            extract_move(&before, &after, Color::White),
            Err(RenderError::InconsistentCaptures)
        );
    }
}
