//! Conversions between board observations and patch-major model inputs.

use gobench_core::go::BoardState;
use gobench_core::render::{render, RenderSpec, TokenGrid, FRAME_TOKENS};

use crate::config::{InputMode, LdmConfig};
use crate::LdmError;

/// Patch-major layout: position `s` (row-major over the g x g grid) holds its
/// block's cells row-major, each with `channels` values.
fn patchify(values: &[f64], side: usize, channels: usize, grid: usize) -> Vec<f64> {
    let b = side / grid;
    let mut out = Vec::with_capacity(values.len());
    for pr in 0..grid {
        for pc in 0..grid {
            for r in 0..b {
                for c in 0..b {
                    let cell = (pr * b + r) * side + pc * b + c;
                    out.extend_from_slice(&values[cell * channels..(cell + 1) * channels]);
                }
            }
        }
    }
    out
}

fn unpatchify(values: &[f64], side: usize, channels: usize, grid: usize) -> Vec<f64> {
    let b = side / grid;
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    for pr in 0..grid {
        for pc in 0..grid {
            for r in 0..b {
                for c in 0..b {
                    let cell = (pr * b + r) * side + pc * b + c;
                    out[cell * channels..(cell + 1) * channels].copy_from_slice(&values[i..i + channels]);
                    i += channels;
                }
            }
        }
    }
    out
}

/// Model input for one board-plane frame.
pub fn grid_input(grid: &TokenGrid, config: &LdmConfig) -> Result<Vec<f64>, LdmError> {
    if grid.size != config.board_size {
        return Err(LdmError::Config(format!(
            "grid of size {} for a {}x{} model",
            grid.size, config.board_size, config.board_size
        )));
    }
    let mut planes = vec![0.0; grid.tokens.len() * 3];
    for (i, &t) in grid.tokens.iter().enumerate() {
        if t >= FRAME_TOKENS {
            return Err(LdmError::Config(format!("token {t} is not a frame token")));
        }
        planes[i * 3 + t as usize] = 1.0;
    }
    Ok(patchify(&planes, grid.size, 3, config.grid))
}

/// Model input for a position under either input mode.
pub fn state_input(state: &BoardState, config: &LdmConfig, render_spec: &RenderSpec) -> Result<Vec<f64>, LdmError> {
    match config.input {
        InputMode::BoardPlanes => grid_input(&gobench_core::render::tokenize_state(state), config),
        InputMode::Grayscale { size } => {
            let gray = render(state, render_spec).downsample_gray(size as u32);
            Ok(patchify(&gray, size, 1, config.grid))
        }
    }
}

/// Cuts a frame sequence into non-overlapping clips of `clip_len`; the final
/// partial clip is padded by repeating its last frame.
pub fn clip_frames<T: Clone>(frames: &[T], clip_len: usize) -> Vec<Vec<T>> {
    frames
        .chunks(clip_len.max(1))
        .map(|chunk| {
            let mut clip = chunk.to_vec();
            while clip.len() < clip_len {
                clip.push(chunk[chunk.len() - 1].clone());
            }
            clip
        })
        .collect()
}

/// Per-cell argmax of a reconstructed board-plane frame.
pub fn planes_to_grid(frame: &[f64], config: &LdmConfig) -> TokenGrid {
    let n = config.board_size;
    let planes = unpatchify(frame, n, 3, config.grid);
    let tokens = (0..n * n)
        .map(|i| {
            let p = &planes[i * 3..i * 3 + 3];
            let mut best = 0;
            for k in 1..3 {
                if p[k] > p[best] {
                    best = k;
                }
            }
            best as u32
        })
        .collect();
    TokenGrid { size: n, tokens }
}

/// Reconstructed planes in cell-major order (`[cell][Empty, Black, White]`).
pub fn cell_planes(frame: &[f64], config: &LdmConfig) -> Vec<[f64; 3]> {
    let n = config.board_size;
    let planes = unpatchify(frame, n, 3, config.grid);
    planes.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
}
