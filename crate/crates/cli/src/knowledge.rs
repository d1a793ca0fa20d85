//! Small-board knowledge-learning experiment: a scripted teacher generates the
//! corpus, a latent dynamics model is fitted to it, and one sequence model per
//! prediction-target mode is trained for the same number of steps. Each model
//! then plays through the inverse-dynamics mapping and is scored against the
//! teacher's own choice.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use gobench_core::agent::{Agent, GreedyCaptureTeacher};
use gobench_core::go::zobrist::derive_seed;
use gobench_core::go::{new_game, AnnotatedMove, BoardState, GameRecord, Move, Source};
use gobench_core::render::{tokenize_state, TokenGrid};
use gobench_eval::{action_accuracy, legal_rate, Count};
use gobench_ldm::input::{clip_frames, grid_input};
use gobench_ldm::model::pad_window;
use gobench_ldm::{train_ldm, Ldm, LdmConfig};
use gobench_nn::{FsqMode, FsqSpec};
use gobench_seq::{
    build_sequence, train_ar, ArModel, ArTrainConfig, CodeIdm, CodeIdmConfig, CodeTargets, IdmExample, Policy, SeqAgent,
    SeqMode, SequenceSpec, TokenSequence, TransformerConfig,
};
use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const EVAL_SALT: u64 = 0xe7a1;
const POOL_SALT: u64 = 0x9001;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnowledgeConfig {
    pub board_size: usize,
    /// Training games played by the teacher.
    pub games: usize,
    /// Teacher exploration rate; the corpus needs variety, the labels do not.
    pub epsilon: f64,
    pub max_moves: usize,
    pub eval_games: usize,
    pub eval_states: usize,
    /// Transitions sampled for sequence training (0 = all of them).
    pub train_pool: usize,
    pub ldm: LdmConfig,
    pub ar: ArTrainConfig,
    pub idm: CodeIdmConfig,
    /// Labelled transitions (taken from the training pool) the code classifier sees.
    pub idm_examples: usize,
    pub modes: Vec<SeqMode>,
    /// Intervention sweep on the codes-and-frames model.
    pub interventions: bool,
    pub seed: u64,
}

impl Default for KnowledgeConfig {
    fn default() -> Self {
        let mut ldm = LdmConfig {
            board_size: 5,
            grid: 5,
            dim: 32,
            heads: 4,
            head_hidden: 64,
            decoder_hidden: 64,
            fsq: FsqSpec::new(vec![5, 5, 5]).expect("valid levels"),
            steps: 1500,
            ..LdmConfig::default()
        };
        ldm.adam.lr = 2e-3;
        ldm.adam.max_steps = ldm.steps;
        let mut ar = ArTrainConfig {
            model: TransformerConfig {
                layers: 2,
                dim: 64,
                heads: 4,
                context: 64,
                mlp_hidden: 128,
                ..TransformerConfig::default()
            },
            steps: 2000,
            ..ArTrainConfig::default()
        };
        ar.adam.lr = 2e-3;
        ar.adam.max_steps = ar.steps;
        KnowledgeConfig {
            board_size: 5,
            games: 20_000,
            epsilon: 0.25,
            max_moves: 40,
            eval_games: 200,
            eval_states: 500,
            train_pool: 40_000,
            ldm,
            ar,
            idm: CodeIdmConfig::default(),
            idm_examples: 10_000,
            modes: vec![SeqMode::FramesOnly, SeqMode::CodesOnly, SeqMode::CodesAndFrames],
            interventions: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeResult {
    pub mode: SeqMode,
    pub legal: Count,
    pub accuracy: Count,
    pub final_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeReport {
    pub ldm_loss: (f64, f64),
    /// Held-out transitions whose move the code classifier recovers from the
    /// board and the encoder's own codes: an upper bound for the codes-only agent.
    pub code_idm: Count,
    pub modes: Vec<ModeResult>,
    /// Accuracy of the codes-and-frames model per intervention label.
    pub interventions: Vec<(String, Count)>,
}

impl KnowledgeReport {
    pub fn mode(&self, mode: SeqMode) -> Option<&ModeResult> {
        self.modes.iter().find(|m| m.mode == mode)
    }

    pub fn intervention(&self, label: &str) -> Option<Count> {
        self.interventions.iter().find(|(l, _)| l == label).map(|(_, c)| *c)
    }
}

/// Self-play games of the teacher; game `g` uses its own exploration stream.
pub fn teacher_games(count: usize, size: usize, epsilon: f64, max_moves: usize, seed: u64) -> Result<Vec<GameRecord>> {
    let mut teacher = GreedyCaptureTeacher::new(epsilon);
    (0..count)
        .map(|g| {
            teacher.reset(derive_seed(seed, g as u64));
            let mut history = vec![new_game(size, gobench_core::go::DEFAULT_KOMI)?];
            let mut moves = Vec::new();
            while moves.len() < max_moves && !history.last().unwrap().is_over() {
                let mv = teacher.decide(&history)?.mv;
                history.push(history.last().unwrap().play(mv)?);
                moves.push(mv);
            }
            let mut record = GameRecord::with_default_komi(size, moves);
            record.source = Source::Synthetic;
            Ok(record)
        })
        .collect()
}

struct Game {
    states: Vec<BoardState>,
    grids: Vec<TokenGrid>,
    frames: Vec<Vec<f64>>,
}

fn prepare(records: &[GameRecord], ldm: &LdmConfig) -> Result<Vec<Game>> {
    records
        .iter()
        .map(|r| {
            let states = r.replay()?;
            let grids: Vec<TokenGrid> = states.iter().map(tokenize_state).collect();
            let frames = grids.iter().map(|g| grid_input(g, ldm)).collect::<Result<_, _>>()?;
            Ok(Game { states, grids, frames })
        })
        .collect()
}

/// Held-out positions with the teacher's deterministic choice as the label.
pub fn eval_positions(records: &[GameRecord], count: usize, seed: u64) -> Result<Vec<(BoardState, AnnotatedMove)>> {
    let mut states = Vec::new();
    for r in records {
        states.extend(r.replay()?.into_iter().filter(|s| !s.is_over()));
    }
    states.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    states.truncate(count);
    states
        .into_iter()
        .map(|s| {
            let best = GreedyCaptureTeacher::best_move(&s);
            let values: BTreeMap<Move, f64> = [(best, 1.0)].into_iter().collect();
            Ok((s, AnnotatedMove::new(best, best, values)?))
        })
        .collect()
}

fn encode(ldm: &Ldm, game: &Game, t: usize) -> Result<Vec<usize>> {
    let window = pad_window(&game.frames, t + 1, ldm.config.horizon)?;
    Ok(ldm.forward(&window, FsqMode::Quantize)?.0.indices)
}

fn played(game: &Game, t: usize) -> Move {
    game.states[t + 1].last_move().expect("every later state follows a move")
}

fn code_idm_accuracy(ldm: &Ldm, idm: &CodeIdm, games: &[Game], limit: usize) -> Result<Count> {
    let mut count = Count { hits: 0, total: 0 };
    'outer: for g in games {
        for t in 0..g.states.len() - 1 {
            if count.total == limit {
                break 'outer;
            }
            count.total += 1;
            if idm.predict(&g.states[t], &encode(ldm, g, t)?)? == played(g, t) {
                count.hits += 1;
            }
        }
    }
    Ok(count)
}

fn held_out_games(c: &KnowledgeConfig) -> Result<Vec<GameRecord>> {
    teacher_games(c.eval_games, c.board_size, c.epsilon, c.max_moves, derive_seed(c.seed, EVAL_SALT))
}

/// The labelled held-out positions every agent is scored on.
pub fn eval_set(c: &KnowledgeConfig) -> Result<Vec<(BoardState, AnnotatedMove)>> {
    eval_positions(&held_out_games(c)?, c.eval_states, c.seed)
}

/// Everything the experiment trains, for checkpointing and further play.
pub struct Trained {
    pub ldm: Ldm,
    pub idm: Arc<CodeIdm>,
    pub models: Vec<(SequenceSpec, Arc<ArModel>)>,
}

impl Trained {
    /// A greedy player for the model trained in `mode`.
    pub fn agent(&self, mode: SeqMode, name: &str) -> Result<SeqAgent> {
        let (spec, model) = self
            .models
            .iter()
            .find(|(s, _)| s.mode == mode)
            .ok_or_else(|| anyhow::anyhow!("no {} model was trained", mode.as_str()))?;
        Ok(SeqAgent::new(name, model.clone(), spec.clone(), Some(self.idm.clone()), Policy::Greedy)?)
    }
}

pub fn run(config: &KnowledgeConfig) -> Result<KnowledgeReport> {
    Ok(run_models(config)?.0)
}

pub fn run_models(config: &KnowledgeConfig) -> Result<(KnowledgeReport, Trained)> {
    let clock = Instant::now();
    let c = config;
    let mut ldm_cfg = c.ldm.clone();
    ldm_cfg.board_size = c.board_size;
    ldm_cfg.seed = c.seed;
    let records = teacher_games(c.games, c.board_size, c.epsilon, c.max_moves, c.seed)?;
    let held_out = held_out_games(c)?;
    let games = prepare(&records, &ldm_cfg).context("stage corpus")?;
    let eval = eval_positions(&held_out, c.eval_states, c.seed)?;
    info!(
        "corpus: {} games, {} states; {} eval positions ({:.0?})",
        games.len(),
        games.iter().map(|g| g.states.len()).sum::<usize>(),
        eval.len(),
        clock.elapsed()
    );

    let clips: Vec<Vec<Vec<f64>>> = games.iter().flat_map(|g| clip_frames(&g.frames, ldm_cfg.clip_len)).collect();
    let (ldm, ldm_losses) = train_ldm(&clips, &ldm_cfg, |_, _, _| {}).context("stage train-ldm")?;
    let ldm_loss = (ldm_losses[0], *ldm_losses.last().unwrap());
    info!("ldm loss {:.4} -> {:.4} ({:.0?})", ldm_loss.0, ldm_loss.1, clock.elapsed());

    // Transitions (game, t): frame t -> t+1 with the codes of the window starting at t.
    let mut pool: Vec<(usize, usize)> = games
        .iter()
        .enumerate()
        .flat_map(|(g, game)| (0..game.states.len() - 1).map(move |t| (g, t)))
        .collect();
    if c.train_pool > 0 && pool.len() > c.train_pool {
        pool.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(c.seed, POOL_SALT)));
        pool.truncate(c.train_pool);
        pool.sort_unstable();
    }
    let codes: Vec<Vec<usize>> = pool
        .iter()
        .map(|&(g, t)| encode(&ldm, &games[g], t))
        .collect::<Result<_>>()
        .context("stage encode")?;
    info!("encoded {} transitions ({:.0?})", pool.len(), clock.elapsed());

    let examples: Vec<IdmExample> = pool
        .iter()
        .zip(&codes)
        .take(c.idm_examples)
        .map(|(&(g, t), z)| IdmExample {
            state: games[g].states[t].clone(),
            codes: z.clone(),
            mv: played(&games[g], t),
        })
        .collect();
    let mut idm_cfg = c.idm.clone();
    idm_cfg.seed = c.seed;
    let mut idm = CodeIdm::new(c.board_size, ldm_cfg.horizon, ldm_cfg.fsq.codebook_size(), &idm_cfg);
    idm.train(&examples, &idm_cfg).context("stage train-idm")?;
    drop(examples);
    let code_idm = code_idm_accuracy(&ldm, &idm, &prepare(&held_out, &ldm_cfg)?, c.eval_states)?;
    info!("code-only move recovery {:.1}% ({:.0?})", code_idm.percent(), clock.elapsed());
    let idm = Arc::new(idm);

    let latent_vocab = ldm_cfg.fsq.codebook_size() as u32;
    let mut modes = Vec::new();
    let mut interventions = Vec::new();
    let mut models = Vec::new();
    for &mode in &c.modes {
        let spec = SequenceSpec::new(mode, c.board_size, ldm_cfg.horizon, latent_vocab);
        let corpus: Vec<TokenSequence> = pool
            .iter()
            .zip(&codes)
            .map(|(&(g, t), z)| build_sequence(&games[g].grids[t..t + 2], std::slice::from_ref(z), &spec))
            .collect::<Result<_, _>>()?;
        let mut ar_cfg = c.ar.clone();
        ar_cfg.model.vocab = spec.vocab();
        ar_cfg.seed = c.seed;
        let (model, losses) = train_ar(&corpus, &ar_cfg, |_, _, _| {}).with_context(|| format!("stage train-ar ({})", mode.as_str()))?;
        drop(corpus);
        let model = Arc::new(ArModel::Transformer(model));
        models.push((spec.clone(), model.clone()));
        let make = |targets: CodeTargets| -> Result<SeqAgent> {
            let agent = SeqAgent::new(mode.as_str(), model.clone(), spec.clone(), Some(idm.clone()), Policy::Greedy)?;
            Ok(agent.with_intervention(targets)?)
        };
        let states: Vec<BoardState> = eval.iter().map(|(s, _)| s.clone()).collect();
        let mut agent = make(CodeTargets::None)?;
        agent.reset(c.seed);
        let legal = legal_rate(&mut agent, &states)?;
        agent.reset(c.seed);
        let accuracy = action_accuracy(&mut agent, &eval)?;
        let final_loss = *losses.last().unwrap();
        info!(
            "{}: loss {:.4}, legal {:.1}%, accuracy {:.1}% ({:.0?})",
            mode.as_str(),
            final_loss,
            legal.percent(),
            accuracy.percent(),
            clock.elapsed()
        );
        modes.push(ModeResult {
            mode,
            legal,
            accuracy,
            final_loss,
        });
        if mode == SeqMode::CodesAndFrames && c.interventions {
            let mut sweep = vec![CodeTargets::None];
            sweep.extend((1..=ldm_cfg.horizon).map(|h| CodeTargets::Indices(vec![h])));
            sweep.push(CodeTargets::All);
            for targets in sweep {
                let label = targets.label();
                let mut agent = make(targets)?;
                agent.reset(c.seed);
                let acc = action_accuracy(&mut agent, &eval)?;
                info!("intervention {label}: accuracy {:.1}%", acc.percent());
                interventions.push((label, acc));
            }
        }
    }
    let report = KnowledgeReport {
        ldm_loss,
        code_idm,
        modes,
        interventions,
    };
    Ok((report, Trained { ldm, idm, models }))
}
