//! The single TOML file every subcommand reads its section from.

use std::path::Path;

use anyhow::{Context, Result};
use gobench_core::render::RenderSpec;
use gobench_eval::TournamentConfig;
use gobench_ldm::LdmConfig;
use gobench_seq::{ArTrainConfig, CodeIdmConfig, SeqMode};
use serde::{Deserialize, Serialize};

use crate::curate::CurationConfig;
use crate::shards::ShardConfig;
use crate::store::IngestFilter;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnotateConfig {
    pub visits: u32,
    /// Engine command line; falls back to the engine environment variable.
    pub engine: Option<String>,
    pub analysis_command: String,
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        AnnotateConfig {
            visits: 100,
            engine: None,
            analysis_command: "kata-analyze".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SequenceConfig {
    pub mode: SeqMode,
    /// Code slots per step when the mode carries no latent model.
    pub horizon: usize,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig {
            mode: SeqMode::FramesOnly,
            horizon: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RatingConfig {
    pub anchor: Option<String>,
    pub anchor_value: f64,
    pub prior_weight: f64,
}

impl Default for RatingConfig {
    fn default() -> Self {
        RatingConfig {
            anchor: None,
            anchor_value: 2700.0,
            prior_weight: 2.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub ingest: IngestFilter,
    pub annotate: AnnotateConfig,
    pub curate: CurationConfig,
    pub render: RenderSpec,
    pub shards: ShardConfig,
    pub sequence: SequenceConfig,
    pub ldm: LdmConfig,
    pub ar: ArTrainConfig,
    pub idm: CodeIdmConfig,
    pub tournament: TournamentConfig,
    pub rating: RatingConfig,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<PipelineConfig> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
            }
            None => Ok(PipelineConfig::default()),
        }
    }

    /// Applies a command-line seed to every seeded stage.
    pub fn with_seed(mut self, seed: Option<u64>) -> PipelineConfig {
        if let Some(s) = seed {
            self.seed = s;
        }
        self.ldm.seed = self.seed;
        self.ar.seed = self.seed;
        self.idm.seed = self.seed;
        self.tournament.seed = self.seed;
        self
    }
}
