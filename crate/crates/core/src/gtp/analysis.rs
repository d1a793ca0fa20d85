use serde::{Deserialize, Serialize};

use super::{parse_vertex, GtpError};
use crate::go::Move;

/// One candidate move from an analysis reply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisLine {
    pub mv: Move,
    pub visits: u64,
    /// Win probability for the player to move.
    pub winrate: f64,
    pub score_lead: f64,
    pub order: u32,
}

/// Keys whose value is a list running to the next `info` keyword.
const LIST_KEYS: &[&str] = &[
    "pv",
    "pvVisits",
    "pvEdgeVisits",
    "ownership",
    "ownershipStdev",
    "movesOwnership",
    "movesOwnershipStdev",
];

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, GtpError> {
    value.parse().map_err(|_| GtpError::MalformedField {
        key: key.to_string(),
        value: value.to_string(),
    })
}

/// Parses whitespace-separated `info` blocks (`info move E5 visits 100 winrate 0.52 ...`).
/// Unknown keys are skipped. Lines are returned sorted by `order`.
pub fn parse_analysis(text: &str, size: usize) -> Result<Vec<AnalysisLine>, GtpError> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut lines = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i] != "info" {
            i += 1;
            continue;
        }
        i += 1;
        let (mut mv, mut visits, mut winrate, mut score_lead, mut order) = (None, None, None, 0.0, None);
        while i < tokens.len() && tokens[i] != "info" {
            let key = tokens[i];
            if LIST_KEYS.contains(&key) {
                i += 1;
                while i < tokens.len() && tokens[i] != "info" {
                    i += 1;
                }
                break;
            }
            let value = tokens.get(i + 1).copied().unwrap_or("");
            match key {
                "move" => mv = Some(parse_vertex(value, size)?),
                "visits" => visits = Some(number::<u64>(key, value)?),
                "winrate" => {
                    let w: f64 = number(key, value)?;
                    if !(0.0..=1.0).contains(&w) {
                        return Err(GtpError::MalformedField {
                            key: key.into(),
                            value: value.into(),
                        });
                    }
                    winrate = Some(w);
                }
                "scoreLead" => score_lead = number(key, value)?,
                "order" => order = Some(number::<u32>(key, value)?),
                _ => {}
            }
            i += 2;
        }
        let missing = |k: &str| GtpError::MalformedField {
            key: k.to_string(),
            value: String::new(),
        };
        lines.push(AnalysisLine {
            mv: mv.ok_or_else(|| missing("move"))?,
            visits: visits.ok_or_else(|| missing("visits"))?,
            winrate: winrate.ok_or_else(|| missing("winrate"))?,
            score_lead,
            order: order.unwrap_or(lines.len() as u32),
        });
    }
    if lines.is_empty() {
        return Err(GtpError::NoAnalysis);
    }
    lines.sort_by_key(|l| l.order);
    if lines.windows(2).any(|w| w[0].order == w[1].order) {
        return Err(GtpError::MalformedField {
            key: "order".into(),
            value: "duplicate".into(),
        });
    }
    if !order_zero_is_best(&lines) {
        log::warn!("analysis order-0 move does not have the maximum winrate");
    }
    Ok(lines)
}

/// Data-quality check: the first-ranked move should carry the highest winrate.
pub fn order_zero_is_best(lines: &[AnalysisLine]) -> bool {
    let Some(first) = lines.iter().find(|l| l.order == 0) else {
        return false;
    };
    lines.iter().all(|l| l.winrate <= first.winrate)
}
