//! Bradley-Terry ratings on the Elo scale, fitted by minorization-maximization.

use serde::{Deserialize, Serialize};

use crate::tournament::MatchResult;
use crate::EvalError;

const ELO_PER_NAT: f64 = 400.0 / std::f64::consts::LN_10;

/// `score[i][j]`: points agent `i` earned against agent `j` (draws count half).
#[derive(Clone, Debug, PartialEq)]
pub struct Tally {
    pub names: Vec<String>,
    pub score: Vec<Vec<f64>>,
}

impl Tally {
    pub fn new(names: Vec<String>) -> Tally {
        let n = names.len();
        Tally {
            names,
            score: vec![vec![0.0; n]; n],
        }
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Records `games` games between `i` and `j` of which `i` scored `points`.
    pub fn add(&mut self, i: usize, j: usize, points: f64, games: f64) {
        self.score[i][j] += points;
        self.score[j][i] += games - points;
    }

    /// Agents sorted by name; Black's score is credited against White.
    pub fn from_results(results: &[MatchResult]) -> Tally {
        let mut names: Vec<String> = results.iter().flat_map(|r| [r.black.clone(), r.white.clone()]).collect();
        names.sort();
        names.dedup();
        let mut t = Tally::new(names);
        for r in results {
            let (b, w) = (t.index(&r.black).unwrap(), t.index(&r.white).unwrap());
            t.add(b, w, r.black_score(), 1.0);
        }
        t
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub name: String,
    pub elo: f64,
    pub uncertainty: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingTable {
    pub ratings: Vec<Rating>,
    pub anchor: String,
    pub anchor_value: f64,
}

impl RatingTable {
    pub fn get(&self, name: &str) -> Option<&Rating> {
        self.ratings.iter().find(|r| r.name == name)
    }
}

fn reachable(adj: &dyn Fn(usize, usize) -> bool, n: usize) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !seen[j] && adj(i, j) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Maximum-a-posteriori ratings with `prior_weight` virtual draws per pair,
/// translated so `anchor` sits exactly at `anchor_value`. Uncertainty is the
/// inverse square root of the observed-information diagonal.
pub fn fit_elo(tally: &Tally, anchor: &str, anchor_value: f64, prior_weight: f64) -> Result<RatingTable, EvalError> {
    let n = tally.names.len();
    let a = tally.index(anchor).ok_or_else(|| EvalError::UnknownAgent(anchor.to_string()))?;
    let mut w = tally.score.clone();
    for (i, row) in w.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            if i != j {
                *x += prior_weight / 2.0;
            }
        }
    }
    if n > 1 {
        let games = |i: usize, j: usize| w[i][j] + w[j][i] > 0.0;
        if !reachable(&games, n) {
            return Err(EvalError::Disconnected);
        }
        // A finite maximum needs every split of the agents to have wins both ways.
        let beats = |i: usize, j: usize| w[i][j] > 0.0;
        let beaten = |i: usize, j: usize| w[j][i] > 0.0;
        if !reachable(&beats, n) || !reachable(&beaten, n) {
            return Err(EvalError::Unbounded);
        }
    }
    let games = |i: usize, j: usize| w[i][j] + w[j][i];
    let wins: Vec<f64> = w.iter().map(|row| row.iter().sum()).collect();
    let mut gamma = vec![1.0; n];
    for _ in 0..1_000_000 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            let denom: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| games(i, j) / (gamma[i] + gamma[j]))
                .sum();
            next[i] = if denom > 0.0 { wins[i] / denom } else { gamma[i] };
        }
        let log_mean = next.iter().map(|g: &f64| g.ln()).sum::<f64>() / n as f64;
        let scale = log_mean.exp();
        next.iter_mut().for_each(|g| *g /= scale);
        let change = next
            .iter()
            .zip(&gamma)
            .map(|(a, b)| ((a - b) / b).abs())
            .fold(0.0, f64::max);
        gamma = next;
        if change < 1e-10 {
            break;
        }
    }
    let base = ELO_PER_NAT * gamma[a].ln();
    let ratings = (0..n)
        .map(|i| {
            let info: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let p = gamma[i] / (gamma[i] + gamma[j]);
                    games(i, j) * p * (1.0 - p)
                })
                .sum();
            Rating {
                name: tally.names[i].clone(),
                elo: if i == a {
                    anchor_value
                } else {
                    ELO_PER_NAT * gamma[i].ln() - base + anchor_value
                },
                uncertainty: if info > 0.0 { ELO_PER_NAT / info.sqrt() } else { f64::INFINITY },
            }
        })
        .collect();
    Ok(RatingTable {
        ratings,
        anchor: anchor.to_string(),
        anchor_value,
    })
}

/// Convenience wrapper: tallies `results` and fits them.
pub fn fit_results(results: &[MatchResult], anchor: &str, anchor_value: f64, prior_weight: f64) -> Result<RatingTable, EvalError> {
    fit_elo(&Tally::from_results(results), anchor, anchor_value, prior_weight)
}

/// Win probability of a player rated `gap` points above the opponent.
pub fn expected_score(gap: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf(-gap / 400.0))
}
