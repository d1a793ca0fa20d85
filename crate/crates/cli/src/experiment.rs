//! Experiment driver: trains the latent dynamics model, the code classifier
//! and one sequence model per mode, scores them, optionally plays them in a
//! tournament against baselines, and writes every artifact with a manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use gobench_core::agent::Agent;
use gobench_core::go::BoardState;
use gobench_eval::{action_accuracy, fit_results, legal_rate, run_tournament, AgentRow, MetricsReport, TournamentConfig};
use gobench_seq::ArModel;
use log::info;
use serde::{Deserialize, Serialize};

use crate::agents::parse_agent;
use crate::knowledge::{eval_set, run_models, KnowledgeConfig, KnowledgeReport};
use crate::store::{file_hash, sha256_hex};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlayConfig {
    pub games_per_pair: usize,
    pub move_cap: usize,
    /// Extra agents in the agent-spec grammar, e.g. `"random"` or `"teacher"`.
    pub baselines: Vec<String>,
    pub anchor: String,
    pub anchor_value: f64,
    pub prior_weight: f64,
}

impl Default for PlayConfig {
    fn default() -> Self {
        PlayConfig {
            games_per_pair: 20,
            move_cap: 60,
            baselines: vec!["random".into(), "teacher".into()],
            anchor: "teacher".into(),
            anchor_value: 2700.0,
            prior_weight: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub knowledge: KnowledgeConfig,
    pub tournament: Option<PlayConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "experiment".into(),
            seed: 0,
            knowledge: KnowledgeConfig::default(),
            tournament: None,
        }
    }
}

/// The bundled desk-scale configuration.
pub const DESK_GO: &str = include_str!("../configs/desk-go.toml");

pub fn desk_go() -> ExperimentConfig {
    toml::from_str(DESK_GO).expect("bundled config parses")
}

#[derive(Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    pub knowledge: KnowledgeReport,
    pub report: MetricsReport,
}

fn fresh_dir(root: &Path, name: &str) -> Result<PathBuf> {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    for k in 0.. {
        let dir = root.join(if k == 0 {
            format!("{name}-{stamp}")
        } else {
            format!("{name}-{stamp}-{k}")
        });
        if !dir.exists() {
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            return Ok(dir);
        }
    }
    unreachable!()
}

fn save(dir: &Path, file: &str, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut out = BufWriter::new(File::create(dir.join(file))?);
    write(&mut out)?;
    out.flush()?;
    Ok(())
}

fn score_baseline(spec: &str, eval: &[(BoardState, gobench_core::go::AnnotatedMove)], seed: u64) -> Result<AgentRow> {
    let states: Vec<BoardState> = eval.iter().map(|(s, _)| s.clone()).collect();
    let mut agent = parse_agent(spec)?;
    let mut row = AgentRow::new(&agent.name());
    agent.reset(seed);
    row.legal = Some(legal_rate(agent.as_mut(), &states)?);
    agent.reset(seed);
    row.accuracy = Some(action_accuracy(agent.as_mut(), eval)?);
    Ok(row)
}

/// Runs `config` into a new timestamped directory under `root`.
pub fn run_experiment(config: &ExperimentConfig, root: &Path) -> Result<Outcome> {
    let dir = fresh_dir(root, &config.name)?;
    info!("experiment {} -> {}", config.name, dir.display());
    let mut kc = config.knowledge.clone();
    kc.seed = config.seed;
    fs::write(dir.join("config.toml"), toml::to_string(config).context("echoing the config")?)?;

    let (knowledge, trained) = run_models(&kc)?;
    save(&dir, "ldm.ckpt", |w| Ok(trained.ldm.save(w)?))?;
    save(&dir, "idm.ckpt", |w| Ok(trained.idm.save(w)?))?;
    for (spec, model) in &trained.models {
        if let ArModel::Transformer(t) = model.as_ref() {
            save(&dir, &format!("ar-{}.ckpt", spec.mode.as_str()), |w| {
                Ok(t.save(w, serde_json::json!({ "spec": spec }))?)
            })?;
        }
    }
    fs::write(dir.join("metrics.json"), serde_json::to_vec_pretty(&knowledge)?)?;
    save(&dir, "interventions.csv", |w| {
        writeln!(w, "code_index,hits,total,accuracy")?;
        for (label, c) in &knowledge.interventions {
            writeln!(w, "{label},{},{},{:.4}", c.hits, c.total, c.percent())?;
        }
        Ok(())
    })?;

    let mut rows: Vec<AgentRow> = knowledge
        .modes
        .iter()
        .map(|m| AgentRow {
            legal: Some(m.legal),
            accuracy: Some(m.accuracy),
            ..AgentRow::new(m.mode.as_str())
        })
        .collect();
    let mut ratings = None;
    if let Some(play) = &config.tournament {
        let eval = eval_set(&kc).context("stage eval")?;
        for b in &play.baselines {
            rows.push(score_baseline(b, &eval, config.seed).context("stage eval")?);
        }
        let mut agents: Vec<Box<dyn Agent>> = Vec::new();
        for (spec, _) in &trained.models {
            agents.push(Box::new(trained.agent(spec.mode, spec.mode.as_str())?));
        }
        for b in &play.baselines {
            agents.push(parse_agent(b)?);
        }
        let tc = TournamentConfig {
            games_per_pair: play.games_per_pair,
            seed: config.seed,
            move_cap: play.move_cap,
            board_size: kc.board_size,
            ..TournamentConfig::default()
        };
        let results = run_tournament(&mut agents, &tc).context("stage tournament")?;
        save(&dir, "tournament.jsonl", |w| {
            for r in &results {
                serde_json::to_writer(&mut *w, r)?;
                writeln!(w)?;
            }
            Ok(())
        })?;
        let table = fit_results(&results, &play.anchor, play.anchor_value, play.prior_weight).context("stage report")?;
        fs::write(dir.join("ratings.json"), serde_json::to_vec_pretty(&table)?)?;
        ratings = Some(table);
    }
    let report = MetricsReport {
        rows,
        ratings,
        config: serde_json::to_value(config)?,
    };
    fs::write(dir.join("report.md"), report.table())?;
    fs::write(dir.join("report.csv"), report.csv())?;
    fs::write(dir.join("report.json"), serde_json::to_vec_pretty(&report)?)?;

    let mut files: Vec<String> = fs::read_dir(&dir)?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()?;
    files.sort();
    let mut manifest = serde_json::Map::new();
    for f in files {
        manifest.insert(f.clone(), file_hash(&dir.join(&f))?.into());
    }
    let body = serde_json::to_vec_pretty(&manifest)?;
    info!("manifest {}", sha256_hex(&body));
    fs::write(dir.join("manifest.json"), body)?;
    Ok(Outcome { dir, knowledge, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_is_the_reference_setting() {
        let c = desk_go();
        assert_eq!(c.name, "desk-go");
        assert_eq!(c.knowledge, KnowledgeConfig::default());
        assert_eq!(c.tournament, Some(PlayConfig::default()));
    }

    #[test]
    fn config_echo_round_trips() {
        let c = desk_go();
        let back: ExperimentConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
