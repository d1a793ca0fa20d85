//! Zobrist keys for whole-board position hashing.
//!
//! Keys are laid out on a 19x19 grid so one table serves every board size; a
//! per-size key is mixed into the empty-board hash so equal stone patterns on
//! different board sizes do not collide. The side to move is not hashed
//! (positional superko).

use std::sync::OnceLock;

use super::types::Color;

pub const MAX_SIZE: usize = 19;
const SEED: u64 = 0x9E37_79B9_7F4A_7C15;

struct Table {
    stones: [[u64; 2]; MAX_SIZE * MAX_SIZE],
    sizes: [u64; MAX_SIZE + 1],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent child seed for stream `salt` of `base` (per-game, per-decision streams).
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut state = base ^ salt.wrapping_mul(0xD1B5_4A32_D192_ED03);
    splitmix64(&mut state)
}

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut state = SEED;
        let mut stones = [[0u64; 2]; MAX_SIZE * MAX_SIZE];
        for entry in stones.iter_mut() {
            entry[0] = splitmix64(&mut state);
            entry[1] = splitmix64(&mut state);
        }
        let mut sizes = [0u64; MAX_SIZE + 1];
        for entry in sizes.iter_mut() {
            *entry = splitmix64(&mut state);
        }
        Table { stones, sizes }
    })
}

/// Key for a stone of `color` at (`col`, `row`).
#[inline]
pub fn stone_key(col: usize, row: usize, color: Color) -> u64 {
    let slot = match color {
        Color::Black => 0,
        Color::White => 1,
    };
    table().stones[row * MAX_SIZE + col][slot]
}

/// Hash of the empty board of the given size.
#[inline]
pub fn empty_key(size: usize) -> u64 {
    table().sizes[size]
}
