//! Comparison table: one row per agent, percentages to one decimal.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::elo::RatingTable;
use crate::metrics::{Count, ValueRatio};

const MISSING: &str = "—";
const HEADERS: [&str; 5] = [
    "Agent",
    "Legal rate (%)",
    "Action-Value (%)",
    "Best Action Acc. (%)",
    "Tournament Elo",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentRow {
    pub agent: String,
    pub legal: Option<Count>,
    pub action_value: Option<ValueRatio>,
    pub accuracy: Option<Count>,
}

impl AgentRow {
    pub fn new(agent: &str) -> AgentRow {
        AgentRow {
            agent: agent.to_string(),
            legal: None,
            action_value: None,
            accuracy: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<AgentRow>,
    pub ratings: Option<RatingTable>,
    /// Free-form run settings echoed into the JSON form of the report.
    #[serde(default)]
    pub config: serde_json::Value,
}

fn pct(x: Option<f64>) -> String {
    x.map_or(MISSING.to_string(), |v| format!("{v:.1}"))
}

impl MetricsReport {
    fn cells(&self) -> Vec<[String; 5]> {
        self.rows
            .iter()
            .map(|r| {
                let elo = self
                    .ratings
                    .as_ref()
                    .and_then(|t| t.get(&r.agent))
                    .map_or(MISSING.to_string(), |e| format!("{:.0} ± {:.0}", e.elo, e.uncertainty));
                [
                    r.agent.clone(),
                    pct(r.legal.map(|c| c.percent())),
                    pct(r.action_value.map(|v| v.percent)),
                    pct(r.accuracy.map(|c| c.percent())),
                    elo,
                ]
            })
            .collect()
    }

    /// Markdown-style table with columns padded to their widest cell.
    pub fn table(&self) -> String {
        let rows = self.cells();
        let mut width: Vec<usize> = HEADERS.iter().map(|h| h.chars().count()).collect();
        for r in &rows {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::from("|");
            for (c, w) in cells.iter().zip(&width) {
                let pad = w - c.chars().count();
                write!(s, " {c}{} |", " ".repeat(pad)).unwrap();
            }
            s.push('\n');
            s
        };
        let mut out = line(&HEADERS.map(String::from));
        out.push('|');
        for w in &width {
            out.push_str(&"-".repeat(w + 2));
            out.push('|');
        }
        out.push('\n');
        for r in &rows {
            out.push_str(&line(r));
        }
        out
    }

    /// Same columns as [`table`](Self::table); Elo is split into value and uncertainty.
    pub fn csv(&self) -> String {
        let mut out = String::from("agent,legal_rate,action_value,best_action_acc,elo,elo_uncertainty\n");
        let num = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.4}"));
        for r in &self.rows {
            let e = self.ratings.as_ref().and_then(|t| t.get(&r.agent));
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.agent,
                num(r.legal.map(|c| c.percent())),
                num(r.action_value.map(|v| v.percent)),
                num(r.accuracy.map(|c| c.percent())),
                num(e.map(|e| e.elo)),
                num(e.map(|e| e.uncertainty)),
            )
            .unwrap();
        }
        out
    }
}
