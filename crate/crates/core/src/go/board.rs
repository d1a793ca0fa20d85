//! Immutable Go position with positional-superko legality, eager captures and
//! Tromp-Taylor area scoring.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::types::{Cell, Color, Move, Verdict};
use super::zobrist::{self, MAX_SIZE};
use crate::error::GoError;

pub const DEFAULT_KOMI: f64 = 7.0;

/// Fixed-capacity bitset over board points (19x19 fits in 384 bits).
#[derive(Clone, Copy, Default)]
struct PointSet([u64; 6]);

impl PointSet {
    #[inline]
    fn insert(&mut self, i: usize) -> bool {
        let (w, b) = (i / 64, 1u64 << (i % 64));
        let fresh = self.0[w] & b == 0;
        self.0[w] |= b;
        fresh
    }

    #[inline]
    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] & (1u64 << (i % 64)) != 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Winner {
    Black,
    White,
    Draw,
}

impl Winner {
    pub fn from_color(c: Color) -> Winner {
        match c {
            Color::Black => Winner::Black,
            Color::White => Winner::White,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndReason {
    TwoPasses,
    Resign,
    MoveCap,
    IllegalMove,
    Forfeit,
}

/// Adjudicated outcome. `margin` is `None` for resignations and forfeits;
/// for scored games `winner == Draw` exactly when the margin is zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameResult {
    pub winner: Winner,
    pub margin: Option<f64>,
    pub end_reason: EndReason,
}

impl GameResult {
    /// Win for `winner` without a counted margin (resign, forfeit, illegal move).
    pub fn by_default(winner: Color, end_reason: EndReason) -> GameResult {
        GameResult {
            winner: Winner::from_color(winner),
            margin: None,
            end_reason,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoardState {
    size: usize,
    komi: f64,
    grid: Vec<Cell>,
    to_move: Color,
    move_number: u32,
    consecutive_passes: u8,
    resigned: Option<Color>,
    hash: u64,
    history: Vec<u64>,
    last_move: Option<Move>,
}

impl BoardState {
    pub fn new(size: usize, komi: f64) -> Result<BoardState, GoError> {
        if !(2..=MAX_SIZE).contains(&size) {
            return Err(GoError::BadSize(size));
        }
        let hash = zobrist::empty_key(size);
        Ok(BoardState {
            size,
            komi,
            grid: vec![Cell::Empty; size * size],
            to_move: Color::Black,
            move_number: 0,
            consecutive_passes: 0,
            resigned: None,
            hash,
            history: vec![hash],
            last_move: None,
        })
    }

    /// Builds a position from a stone configuration. History holds only the
    /// given position; intended for fixtures and decoded token grids.
    pub fn from_cells(size: usize, komi: f64, cells: &[Cell], to_move: Color) -> Result<BoardState, GoError> {
        let mut state = BoardState::new(size, komi)?;
        if cells.len() != size * size {
            return Err(GoError::BadGrid(format!(
                "expected {} cells, got {}",
                size * size,
                cells.len()
            )));
        }
        state.grid.copy_from_slice(cells);
        state.to_move = to_move;
        state.hash = state.compute_hash();
        state.history = vec![state.hash];
        Ok(state)
    }

    /// Parses the `.XO` text dump (one row per line).
    pub fn from_dump(text: &str, komi: f64, to_move: Color) -> Result<BoardState, GoError> {
        let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let size = rows.len();
        let mut cells = Vec::with_capacity(size * size);
        for row in &rows {
            if row.chars().count() != size {
                return Err(GoError::BadGrid(format!("row {row:?} is not {size} wide")));
            }
            for c in row.chars() {
                cells.push(Cell::from_char(c).ok_or_else(|| GoError::BadGrid(format!("bad cell {c:?}")))?);
            }
        }
        BoardState::from_cells(size, komi, &cells, to_move)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn komi(&self) -> f64 {
        self.komi
    }

    pub fn to_move(&self) -> Color {
        self.to_move
    }

    pub fn move_number(&self) -> u32 {
        self.move_number
    }

    pub fn consecutive_passes(&self) -> u8 {
        self.consecutive_passes
    }

    pub fn last_move(&self) -> Option<Move> {
        self.last_move
    }

    pub fn cells(&self) -> &[Cell] {
        &self.grid
    }

    pub fn get(&self, col: usize, row: usize) -> Cell {
        self.grid[row * self.size + col]
    }

    /// Incrementally maintained Zobrist hash of the stone configuration.
    pub fn hash(&self) -> u64 {
        self.hash
    }

    /// Hashes of every position since the start of the game, oldest first, no duplicates.
    pub fn history(&self) -> &[u64] {
        &self.history
    }

    pub fn resigned(&self) -> Option<Color> {
        self.resigned
    }

    pub fn is_over(&self) -> bool {
        self.consecutive_passes >= 2 || self.resigned.is_some()
    }

    pub fn stone_count(&self) -> usize {
        self.grid.iter().filter(|c| **c != Cell::Empty).count()
    }

    /// From-scratch Zobrist hash; always equal to [`BoardState::hash`].
    pub fn compute_hash(&self) -> u64 {
        let mut h = zobrist::empty_key(self.size);
        for (i, cell) in self.grid.iter().enumerate() {
            if let Some(color) = cell.color() {
                h ^= zobrist::stone_key(i % self.size, i / self.size, color);
            }
        }
        h
    }

    #[inline]
    fn key(&self, i: usize, color: Color) -> u64 {
        zobrist::stone_key(i % self.size, i / self.size, color)
    }

    #[inline]
    fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> {
        let n = self.size;
        let (c, r) = (i % n, i / n);
        let up = (r > 0).then(|| i - n);
        let down = (r + 1 < n).then(|| i + n);
        let left = (c > 0).then(|| i - 1);
        let right = (c + 1 < n).then(|| i + 1);
        [up, down, left, right].into_iter().flatten()
    }

    /// Flood-fills the group containing `start`. Returns the stones and whether
    /// the group has a liberty other than `ignore`.
    fn group(&self, start: usize, ignore: Option<usize>, stones: &mut Vec<usize>) -> bool {
        let color = self.grid[start];
        let mut seen = PointSet::default();
        let mut has_liberty = false;
        stones.clear();
        seen.insert(start);
        stones.push(start);
        let mut head = 0;
        while head < stones.len() {
            let p = stones[head];
            head += 1;
            for q in self.neighbors(p) {
                let cell = self.grid[q];
                if cell == Cell::Empty {
                    if Some(q) != ignore {
                        has_liberty = true;
                    }
                } else if cell == color && seen.insert(q) {
                    stones.push(q);
                }
            }
        }
        has_liberty
    }

    /// Evaluates a placement at `idx` for the player to move: captured stones
    /// and resulting hash, or the failing verdict.
    fn try_place(&self, idx: usize) -> Result<(Vec<usize>, u64), Verdict> {
        if self.grid[idx] != Cell::Empty {
            return Err(Verdict::Occupied);
        }
        let me = self.to_move;
        let opp = me.opponent().cell();
        let mut captured = Vec::new();
        let mut taken = PointSet::default();
        let mut stones = Vec::new();
        for q in self.neighbors(idx) {
            if self.grid[q] == opp && !taken.contains(q) && !self.group(q, Some(idx), &mut stones) {
                for &s in &stones {
                    if taken.insert(s) {
                        captured.push(s);
                    }
                }
            }
        }
        if captured.is_empty() {
            let mut breathes = false;
            for q in self.neighbors(idx) {
                let cell = self.grid[q];
                if cell == Cell::Empty || (cell == me.cell() && self.group(q, Some(idx), &mut stones)) {
                    breathes = true;
                    break;
                }
            }
            if !breathes {
                return Err(Verdict::Suicide);
            }
        }
        let mut hash = self.hash ^ self.key(idx, me);
        for &s in &captured {
            hash ^= self.key(s, me.opponent());
        }
        if self.history.contains(&hash) {
            return Err(Verdict::Superko);
        }
        Ok((captured, hash))
    }

    pub fn is_legal(&self, mv: Move) -> Verdict {
        match mv {
            Move::Pass | Move::Resign => Verdict::Legal,
            Move::Place { col, row } => {
                if col as usize >= self.size || row as usize >= self.size {
                    return Verdict::OutOfBounds;
                }
                match self.try_place(row as usize * self.size + col as usize) {
                    Ok(_) => Verdict::Legal,
                    Err(v) => v,
                }
            }
        }
    }

    /// Returns the successor position. Errors when the move is illegal or the game is over.
    pub fn play(&self, mv: Move) -> Result<BoardState, GoError> {
        let mut next = self.clone();
        next.apply(mv)?;
        Ok(next)
    }

    /// In-place variant of [`BoardState::play`]; leaves `self` untouched on error.
    pub fn apply(&mut self, mv: Move) -> Result<(), GoError> {
        if self.is_over() {
            return Err(GoError::GameOver);
        }
        match mv {
            Move::Pass => {
                self.consecutive_passes += 1;
            }
            Move::Resign => {
                self.resigned = Some(self.to_move);
            }
            Move::Place { col, row } => {
                if col as usize >= self.size || row as usize >= self.size {
                    return Err(GoError::IllegalMove(Verdict::OutOfBounds));
                }
                let idx = row as usize * self.size + col as usize;
                let (captured, hash) = self.try_place(idx).map_err(GoError::IllegalMove)?;
                self.grid[idx] = self.to_move.cell();
                for s in captured {
                    self.grid[s] = Cell::Empty;
                }
                self.hash = hash;
                self.history.push(hash);
                self.consecutive_passes = 0;
            }
        }
        self.to_move = self.to_move.opponent();
        self.move_number += 1;
        self.last_move = Some(mv);
        Ok(())
    }

    /// Every legal move for the player to move, placements in point order then Pass.
    pub fn legal_moves(&self) -> Result<Vec<Move>, GoError> {
        if self.is_over() {
            return Err(GoError::GameOver);
        }
        let mut out: Vec<Move> = (0..self.size * self.size)
            .filter(|&i| self.try_place(i).is_ok())
            .map(|i| Move::from_index(i, self.size))
            .collect();
        out.push(Move::Pass);
        Ok(out)
    }

    /// Stones removed if the player to move placed at `mv`; `None` when illegal.
    pub fn captures_of(&self, mv: Move) -> Option<Vec<usize>> {
        match mv {
            Move::Place { col, row } if (col as usize) < self.size && (row as usize) < self.size => self
                .try_place(row as usize * self.size + col as usize)
                .ok()
                .map(|(captured, _)| captured),
            _ => None,
        }
    }

    /// Tromp-Taylor area counts `(black, white)`: stones plus empty regions
    /// that reach stones of only one color.
    pub fn area(&self) -> (usize, usize) {
        let n = self.size * self.size;
        let mut black = 0;
        let mut white = 0;
        let mut seen = PointSet::default();
        let mut region = Vec::new();
        for i in 0..n {
            match self.grid[i] {
                Cell::Black => black += 1,
                Cell::White => white += 1,
                Cell::Empty if !seen.contains(i) => {
                    region.clear();
                    region.push(i);
                    seen.insert(i);
                    let (mut touches_b, mut touches_w) = (false, false);
                    let mut head = 0;
                    while head < region.len() {
                        let p = region[head];
                        head += 1;
                        for q in self.neighbors(p) {
                            match self.grid[q] {
                                Cell::Empty => {
                                    if seen.insert(q) {
                                        region.push(q);
                                    }
                                }
                                Cell::Black => touches_b = true,
                                Cell::White => touches_w = true,
                            }
                        }
                    }
                    if touches_b && !touches_w {
                        black += region.len();
                    } else if touches_w && !touches_b {
                        white += region.len();
                    }
                }
                Cell::Empty => {}
            }
        }
        (black, white)
    }

    /// Area score with `komi` added to White. The end reason is `TwoPasses`
    /// for finished games and `MoveCap` for positions adjudicated early.
    pub fn score(&self, komi: f64) -> GameResult {
        let (b, w) = self.area();
        let diff = b as f64 - w as f64 - komi;
        let winner = if diff > 0.0 {
            Winner::Black
        } else if diff < 0.0 {
            Winner::White
        } else {
            Winner::Draw
        };
        let end_reason = if self.consecutive_passes >= 2 {
            EndReason::TwoPasses
        } else {
            EndReason::MoveCap
        };
        GameResult {
            winner,
            margin: Some(diff.abs()),
            end_reason,
        }
    }

    /// Row-major `.XO` dump, one row per line.
    pub fn dump(&self) -> String {
        let mut s = String::with_capacity(self.size * (self.size + 1));
        for row in self.grid.chunks(self.size) {
            s.extend(row.iter().map(|c| c.to_char()));
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for BoardState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// Starts a game with Black to move.
pub fn new_game(size: usize, komi: f64) -> Result<BoardState, GoError> {
    BoardState::new(size, komi)
}
