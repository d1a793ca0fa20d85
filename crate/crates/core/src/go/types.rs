use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::GoError;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    Black,
    White,
}

impl Color {
    pub fn opponent(self) -> Color {
        match self {
            Color::Black => Color::White,
            Color::White => Color::Black,
        }
    }

    pub fn cell(self) -> Cell {
        match self {
            Color::Black => Cell::Black,
            Color::White => Cell::White,
        }
    }

    /// Single-letter form used by SGF and GTP (`B` / `W`).
    pub fn letter(self) -> char {
        match self {
            Color::Black => 'B',
            Color::White => 'W',
        }
    }
}

/// Content of one intersection.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cell {
    #[default]
    Empty,
    Black,
    White,
}

impl Cell {
    pub fn color(self) -> Option<Color> {
        match self {
            Cell::Empty => None,
            Cell::Black => Some(Color::Black),
            Cell::White => Some(Color::White),
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Cell::Empty => '.',
            Cell::Black => 'X',
            Cell::White => 'O',
        }
    }

    pub fn from_char(c: char) -> Option<Cell> {
        match c {
            '.' => Some(Cell::Empty),
            'X' => Some(Cell::Black),
            'O' => Some(Cell::White),
            _ => None,
        }
    }
}

/// A player action. `col` and `row` are 0-based, row 0 is the top edge.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Move {
    Place { col: u8, row: u8 },
    Pass,
    Resign,
}

impl Move {
    pub fn place(col: usize, row: usize) -> Move {
        Move::Place {
            col: col as u8,
            row: row as u8,
        }
    }

    pub fn is_place(self) -> bool {
        matches!(self, Move::Place { .. })
    }

    /// Point index `row * size + col` for placements.
    pub fn index(self, size: usize) -> Option<usize> {
        match self {
            Move::Place { col, row } => Some(row as usize * size + col as usize),
            _ => None,
        }
    }

    pub fn from_index(index: usize, size: usize) -> Move {
        Move::place(index % size, index / size)
    }
}

/// Compact size-independent text form: SGF-style letter pair (`"ee"`), `"pass"` or `"resign"`.
impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Move::Place { col, row } => {
                write!(f, "{}{}", (b'a' + col) as char, (b'a' + row) as char)
            }
            Move::Pass => f.write_str("pass"),
            Move::Resign => f.write_str("resign"),
        }
    }
}

impl FromStr for Move {
    type Err = GoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pass" => Ok(Move::Pass),
            "resign" => Ok(Move::Resign),
            _ => {
                let b = s.as_bytes();
                if b.len() == 2 && b.iter().all(|c| c.is_ascii_lowercase()) {
                    Ok(Move::Place {
                        col: b[0] - b'a',
                        row: b[1] - b'a',
                    })
                } else {
                    Err(GoError::BadMoveText(s.to_string()))
                }
            }
        }
    }
}

impl Serialize for Move {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Move {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Outcome of a legality check.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Legal,
    Occupied,
    Suicide,
    Superko,
    OutOfBounds,
}

impl Verdict {
    pub fn is_legal(self) -> bool {
        self == Verdict::Legal
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Legal => "legal",
            Verdict::Occupied => "occupied",
            Verdict::Suicide => "suicide",
            Verdict::Superko => "superko",
            Verdict::OutOfBounds => "out of bounds",
        };
        f.write_str(s)
    }
}
