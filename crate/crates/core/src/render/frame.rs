//! Integer-only board rasterizer. Output is bit-identical on every platform.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::go::{BoardState, Cell};

pub type Rgb = [u8; 3];

pub const BACKGROUND: Rgb = [0xDC, 0xB3, 0x5C];
pub const BLACK: Rgb = [0, 0, 0];
pub const WHITE: Rgb = [0xFF, 0xFF, 0xFF];
pub const MARKER: Rgb = [0xFF, 0, 0];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub image_size: u32,
    pub margin: u32,
    pub line_color: Rgb,
    pub line_width: u32,
    pub stone_radius: u32,
    pub background: Rgb,
    pub last_move_marker: bool,
}

impl Default for RenderSpec {
    fn default() -> Self {
        RenderSpec {
            image_size: 256,
            margin: 16,
            line_color: BLACK,
            line_width: 1,
            stone_radius: 13,
            background: BACKGROUND,
            last_move_marker: false,
        }
    }
}

impl RenderSpec {
    /// Pixel distance between adjacent intersections.
    pub fn cell(&self, board_size: usize) -> u32 {
        (self.image_size - 2 * self.margin) / (board_size as u32 - 1).max(1)
    }

    /// Pixel position of intersection `i` along either axis.
    pub fn coord(&self, board_size: usize, i: usize) -> u32 {
        self.margin + i as u32 * self.cell(board_size)
    }

    /// Radius must stay below half a cell so neighbouring stones never touch,
    /// and the sampling offset must clear the grid lines.
    pub fn validate(&self, board_size: usize) -> Result<(), String> {
        let cell = self.cell(board_size);
        if 2 * self.stone_radius >= cell {
            return Err(format!("stone radius {} not below half cell {cell}", self.stone_radius));
        }
        if self.stone_radius / 2 <= self.line_width {
            return Err("stone radius too small for line width".into());
        }
        Ok(())
    }

    /// Offset from an intersection to the pixel sampled by the tokenizer:
    /// inside the stone, off the grid lines and clear of the last-move marker.
    pub fn sample_offset(&self) -> u32 {
        self.stone_radius / 2
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub width: u32,
    pub height: u32,
    /// RGB, row-major.
    pub pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: u32, height: u32, fill: Rgb) -> Frame {
        let mut pixels = Vec::with_capacity((width * height * 3) as usize);
        for _ in 0..width * height {
            pixels.extend_from_slice(&fill);
        }
        Frame { width, height, pixels }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> Rgb {
        let i = ((y * self.width + x) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    fn put(&mut self, x: i64, y: i64, c: Rgb) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let i = ((y as u32 * self.width + x as u32) * 3) as usize;
        self.pixels[i..i + 3].copy_from_slice(&c);
    }

    fn hspan(&mut self, y: i64, x0: i64, x1: i64, c: Rgb) {
        for x in x0..=x1 {
            self.put(x, y, c);
        }
    }

    /// Filled disk via the midpoint circle algorithm.
    fn fill_circle(&mut self, cx: i64, cy: i64, r: i64, c: Rgb) {
        let (mut x, mut y, mut err) = (r, 0i64, 1 - r);
        while x >= y {
            self.hspan(cy + y, cx - x, cx + x, c);
            self.hspan(cy - y, cx - x, cx + x, c);
            self.hspan(cy + x, cx - y, cx + y, c);
            self.hspan(cy - x, cx - y, cx + y, c);
            y += 1;
            if err < 0 {
                err += 2 * y + 1;
            } else {
                x -= 1;
                err += 2 * (y - x) + 1;
            }
        }
    }

    /// Writes an 8-bit RGB PNG.
    pub fn write_png(&self, out: impl Write) -> Result<(), png::EncodingError> {
        let mut encoder = png::Encoder::new(out, self.width, self.height);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header()?;
        writer.write_image_data(&self.pixels)?;
        writer.finish()
    }

    /// Block-averaged luminance in [0, 1], `out_size` x `out_size`, row-major.
    /// Integer accumulation keeps the result platform independent.
    pub fn downsample_gray(&self, out_size: u32) -> Vec<f64> {
        let bw = self.width / out_size;
        let bh = self.height / out_size;
        let mut out = Vec::with_capacity((out_size * out_size) as usize);
        for by in 0..out_size {
            for bx in 0..out_size {
                let mut acc: u64 = 0;
                for y in by * bh..(by + 1) * bh {
                    for x in bx * bw..(bx + 1) * bw {
                        let [r, g, b] = self.get(x, y);
                        // ITU-R 601 weights scaled by 1000
                        acc += 299 * r as u64 + 587 * g as u64 + 114 * b as u64;
                    }
                }
                let denom = (bw * bh) as f64 * 255_000.0;
                out.push(acc as f64 / denom);
            }
        }
        out
    }
}

/// Draws grid lines, then stones, then the optional last-move marker.
pub fn render(state: &BoardState, spec: &RenderSpec) -> Frame {
    let n = state.size();
    let mut frame = Frame::new(spec.image_size, spec.image_size, spec.background);
    let first = spec.coord(n, 0) as i64;
    let last = spec.coord(n, n - 1) as i64;
    let half = (spec.line_width / 2) as i64;
    for i in 0..n {
        let p = spec.coord(n, i) as i64;
        for w in 0..spec.line_width as i64 {
            let off = p - half + w;
            frame.hspan(off, first, last, spec.line_color);
            for y in first..=last {
                frame.put(off, y, spec.line_color);
            }
        }
    }
    let r = spec.stone_radius as i64;
    for row in 0..n {
        for col in 0..n {
            let (cx, cy) = (spec.coord(n, col) as i64, spec.coord(n, row) as i64);
            match state.get(col, row) {
                Cell::Black => frame.fill_circle(cx, cy, r, BLACK),
                Cell::White => frame.fill_circle(cx, cy, r, WHITE),
                Cell::Empty => {}
            }
        }
    }
    if spec.last_move_marker {
        if let Some(crate::go::Move::Place { col, row }) = state.last_move() {
            let (cx, cy) = (spec.coord(n, col as usize) as i64, spec.coord(n, row as usize) as i64);
            let m = r / 4;
            for y in cy - m..=cy + m {
                frame.hspan(y, cx - m, cx + m, MARKER);
            }
        }
    }
    frame
}
