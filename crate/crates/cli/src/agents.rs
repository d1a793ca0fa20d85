//! Agents named on the command line.
//!
//! Spec grammar: `[name=]kind[:arg]` with kinds
//! `random`, `teacher[:epsilon]`, `gtp[:command line]` (defaults to the
//! engine environment variable) and `ar:<checkpoint>[,<idm checkpoint>]`.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use gobench_core::agent::{Agent, AgentError, Decision, GreedyCaptureTeacher, GtpAgent, RandomAgent};
use gobench_core::go::BoardState;
use gobench_core::gtp::{GtpSession, TransportSpec};
use gobench_seq::{ArModel, CodeIdm, Policy, SeqAgent, SequenceSpec, TinyTransformer};

pub const ENGINE_ENV: &str = "GOBENCH_ENGINE";
const GTP_TIMEOUT: Duration = Duration::from_secs(60);

/// Gives any agent a caller-chosen name.
pub struct Named<A> {
    pub name: String,
    pub inner: A,
}

impl<A: Agent> Agent for Named<A> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn reset(&mut self, seed: u64) {
        self.inner.reset(seed)
    }

    fn decide(&mut self, history: &[BoardState]) -> Result<Decision, AgentError> {
        self.inner.decide(history)
    }
}

pub fn engine_command(explicit: Option<&str>) -> Result<String> {
    match explicit {
        Some(c) if !c.trim().is_empty() => Ok(c.to_string()),
        _ => std::env::var(ENGINE_ENV).map_err(|_| anyhow!("no engine command given and {ENGINE_ENV} is unset")),
    }
}

pub fn open_session(command: &str) -> Result<GtpSession> {
    GtpSession::open(&TransportSpec::process(command), GTP_TIMEOUT).with_context(|| format!("starting engine `{command}`"))
}

/// Sequence-model checkpoints carry their sequence spec as metadata.
pub fn load_ar(path: &Path) -> Result<(TinyTransformer, SequenceSpec)> {
    let mut input = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let (model, meta) = TinyTransformer::load(&mut input)?;
    let spec: SequenceSpec = serde_json::from_value(meta["spec"].clone())
        .with_context(|| format!("{}: checkpoint lacks a sequence spec", path.display()))?;
    Ok((model, spec))
}

pub fn load_idm(path: &Path) -> Result<CodeIdm> {
    let mut input = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    Ok(CodeIdm::load(&mut input)?)
}

pub fn parse_agent(spec: &str) -> Result<Box<dyn Agent>> {
    let (name, body) = match spec.split_once('=') {
        Some((n, b)) => (Some(n.to_string()), b),
        None => (None, spec),
    };
    let (kind, arg) = match body.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (body, None),
    };
    let name = name.unwrap_or_else(|| kind.to_string());
    Ok(match kind {
        "random" => Box::new(RandomAgent::new(&name)),
        "teacher" => {
            let eps = arg.map(str::parse).transpose().context("teacher epsilon")?.unwrap_or(0.0);
            Box::new(Named {
                name,
                inner: GreedyCaptureTeacher::new(eps),
            })
        }
        "gtp" => Box::new(GtpAgent::new(&name, open_session(&engine_command(arg)?)?)),
        "ar" => {
            let arg = arg.ok_or_else(|| anyhow!("ar agents need a checkpoint path"))?;
            let (model, idm) = match arg.split_once(',') {
                Some((m, i)) => (m, Some(i)),
                None => (arg, None),
            };
            let (model, seq_spec) = load_ar(Path::new(model))?;
            let idm = idm.map(|p| load_idm(Path::new(p))).transpose()?.map(Arc::new);
            Box::new(SeqAgent::new(
                &name,
                Arc::new(ArModel::Transformer(model)),
                seq_spec,
                idm,
                Policy::Greedy,
            )?)
        }
        other => bail!("unknown agent kind `{other}` in `{spec}`"),
    })
}
