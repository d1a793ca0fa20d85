//! Deliberately naive reference implementations. Nothing here shares code
//! with the production crates; tests compare the two.

use std::collections::{BTreeMap, BTreeSet, HashSet};

/// `'.'`, `'X'` (black) or `'O'` (white), indexed `[row][col]`.
pub type Grid = Vec<Vec<char>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefVerdict {
    Legal,
    Occupied,
    Suicide,
    Superko,
    OutOfBounds,
}

/// Whole-board-history reference engine. Superko compares full grids.
#[derive(Clone, Debug)]
pub struct NaiveGame {
    pub size: usize,
    pub grid: Grid,
    /// `'X'` or `'O'`.
    pub to_move: char,
    pub seen: Vec<Grid>,
    pub passes: u32,
}

fn other(c: char) -> char {
    if c == 'X' {
        'O'
    } else {
        'X'
    }
}

fn adjacent(size: usize, r: usize, c: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    if r > 0 {
        v.push((r - 1, c));
    }
    if r + 1 < size {
        v.push((r + 1, c));
    }
    if c > 0 {
        v.push((r, c - 1));
    }
    if c + 1 < size {
        v.push((r, c + 1));
    }
    v
}

/// Stones of the group at (r, c) and its liberty count, by recursive flood fill.
pub fn flood_group(grid: &Grid, r: usize, c: usize) -> (BTreeSet<(usize, usize)>, usize) {
    let size = grid.len();
    let color = grid[r][c];
    let mut stones = BTreeSet::new();
    let mut libs = BTreeSet::new();
    fn visit(
        grid: &Grid,
        size: usize,
        color: char,
        r: usize,
        c: usize,
        stones: &mut BTreeSet<(usize, usize)>,
        libs: &mut BTreeSet<(usize, usize)>,
    ) {
        if !stones.insert((r, c)) {
            return;
        }
        for (nr, nc) in adjacent(size, r, c) {
            if grid[nr][nc] == '.' {
                libs.insert((nr, nc));
            } else if grid[nr][nc] == color {
                visit(grid, size, color, nr, nc, stones, libs);
            }
        }
    }
    visit(grid, size, color, r, c, &mut stones, &mut libs);
    (stones, libs.len())
}

impl NaiveGame {
    pub fn new(size: usize) -> NaiveGame {
        let grid = vec![vec!['.'; size]; size];
        NaiveGame {
            size,
            seen: vec![grid.clone()],
            grid,
            to_move: 'X',
            passes: 0,
        }
    }

    /// Resulting grid after placing at (col, row), or the failing verdict.
    pub fn try_play(&self, col: usize, row: usize) -> Result<Grid, RefVerdict> {
        if col >= self.size || row >= self.size {
            return Err(RefVerdict::OutOfBounds);
        }
        if self.grid[row][col] != '.' {
            return Err(RefVerdict::Occupied);
        }
        let mut g = self.grid.clone();
        g[row][col] = self.to_move;
        let opp = other(self.to_move);
        let mut captured_any = false;
        for (nr, nc) in adjacent(self.size, row, col) {
            if g[nr][nc] == opp {
                let (stones, libs) = flood_group(&g, nr, nc);
                if libs == 0 {
                    captured_any = true;
                    for (sr, sc) in stones {
                        g[sr][sc] = '.';
                    }
                }
            }
        }
        if !captured_any && flood_group(&g, row, col).1 == 0 {
            return Err(RefVerdict::Suicide);
        }
        if self.seen.iter().any(|h| *h == g) {
            return Err(RefVerdict::Superko);
        }
        Ok(g)
    }

    pub fn verdict(&self, col: usize, row: usize) -> RefVerdict {
        match self.try_play(col, row) {
            Ok(_) => RefVerdict::Legal,
            Err(v) => v,
        }
    }

    pub fn play(&mut self, col: usize, row: usize) -> Result<(), RefVerdict> {
        let g = self.try_play(col, row)?;
        self.grid = g.clone();
        self.seen.push(g);
        self.to_move = other(self.to_move);
        self.passes = 0;
        Ok(())
    }

    pub fn pass(&mut self) {
        self.to_move = other(self.to_move);
        self.passes += 1;
    }

    pub fn legal_points(&self) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for row in 0..self.size {
            for col in 0..self.size {
                if self.try_play(col, row).is_ok() {
                    v.push((col, row));
                }
            }
        }
        v
    }

    pub fn dump(&self) -> String {
        grid_text(&self.grid)
    }
}

pub fn grid_text(grid: &Grid) -> String {
    grid.iter().map(|r| r.iter().collect::<String>() + "\n").collect()
}

pub fn parse_grid(text: &str) -> Grid {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.chars().collect())
        .collect()
}

/// Tromp-Taylor area (black, white) by flood filling each empty region.
pub fn flood_fill_area(grid: &Grid) -> (usize, usize) {
    let size = grid.len();
    let mut black = 0;
    let mut white = 0;
    let mut visited = vec![vec![false; size]; size];
    for r in 0..size {
        for c in 0..size {
            match grid[r][c] {
                'X' => black += 1,
                'O' => white += 1,
                _ if !visited[r][c] => {
                    let mut region = 0;
                    let mut touches = BTreeSet::new();
                    let mut stack = vec![(r, c)];
                    visited[r][c] = true;
                    while let Some((pr, pc)) = stack.pop() {
                        region += 1;
                        for (nr, nc) in adjacent(size, pr, pc) {
                            match grid[nr][nc] {
                                '.' => {
                                    if !visited[nr][nc] {
                                        visited[nr][nc] = true;
                                        stack.push((nr, nc));
                                    }
                                }
                                s => {
                                    touches.insert(s);
                                }
                            }
                        }
                    }
                    if touches.len() == 1 {
                        if touches.contains(&'X') {
                            black += region;
                        } else {
                            white += region;
                        }
                    }
                }
                _ => {}
            }
        }
    }
    (black, white)
}

/// Signed result: black area − white area − komi.
pub fn flood_fill_score(grid: &Grid, komi: f64) -> f64 {
    let (b, w) = flood_fill_area(grid);
    b as f64 - w as f64 - komi
}

/// Per move number: number of distinct positions (compared as full text).
pub fn brute_unique_by_move(games: &[Vec<Grid>]) -> BTreeMap<usize, usize> {
    let mut sets: BTreeMap<usize, HashSet<String>> = BTreeMap::new();
    for game in games {
        for (i, g) in game.iter().enumerate() {
            sets.entry(i).or_default().insert(grid_text(g));
        }
    }
    sets.into_iter().map(|(k, v)| (k, v.len())).collect()
}

/// Per move number: fraction of positions (with multiplicity) present in `reference`.
pub fn brute_repetition_by_move(games: &[Vec<Grid>], reference: &[Grid]) -> BTreeMap<usize, f64> {
    let reference: HashSet<String> = reference.iter().map(grid_text).collect();
    let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for game in games {
        for (i, g) in game.iter().enumerate() {
            let e = counts.entry(i).or_default();
            e.1 += 1;
            if reference.contains(&grid_text(g)) {
                e.0 += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|(k, (hit, total))| (k, hit as f64 / total as f64))
        .collect()
}

/// Central finite-difference gradient of `f` at `x`.
pub fn finite_difference(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + eps;
            let up = f(&p);
            p[i] = orig - eps;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// Closed-form Bradley-Terry gap for two players when A scores fraction `p`.
pub fn elo_gap_for_score(p: f64) -> f64 {
    400.0 * (p / (1.0 - p)).log10()
}
