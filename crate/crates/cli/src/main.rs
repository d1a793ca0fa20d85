use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gobench_cli::agents::{engine_command, open_session, parse_agent};
use gobench_cli::annotate::annotate;
use gobench_cli::config::PipelineConfig;
use gobench_cli::curate::{curate, TestState};
use gobench_cli::experiment::{desk_go, run_experiment, ExperimentConfig};
use gobench_cli::shards::{build_shards, load_shards};
use gobench_cli::store::{file_hash, ingest, read_store, store_hash, write_store};
use gobench_core::go::{AnnotatedMove, BoardState};
use gobench_core::gtp::{serve, ScriptedEngine, TranscriptEntry};
use gobench_core::render::{render, tokenize_state};
use gobench_eval::{
    action_accuracy, agent_value_ratio, dataset_stats, fit_results, legal_rate, reference_hashes, run_tournament,
    AgentRow, MetricsReport, RatingTable,
};
use gobench_ldm::input::{clip_frames, grid_input};
use gobench_ldm::{train_ldm, Ldm};
use gobench_seq::corpus::read_corpus;
use gobench_seq::{train_ar, CodeIdm, IdmExample, SequenceSpec};
use serde::Serialize;

/// Video-style Go benchmark pipeline.
#[derive(Parser)]
#[command(name = "gobench", version)]
struct Cli {
    /// TOML file with per-stage sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory (meaning depends on the subcommand).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads / engine sessions.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read SGF files and JSON-lines stores into one record store.
    Ingest {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Re-annotate every position with engine analysis (resumable).
    Annotate {
        #[arg(long)]
        store: PathBuf,
        /// Engine command line (otherwise the config, then GOBENCH_ENGINE).
        #[arg(long)]
        engine: Option<String>,
    },
    /// Select deduplicated test positions past the opening.
    Curate {
        #[arg(long)]
        store: PathBuf,
    },
    /// Write PNG frames of stored games.
    Render {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 0)]
        game: usize,
        #[arg(long, default_value_t = 1)]
        games: usize,
    },
    /// Clip, encode and serialise training sequences.
    Shards {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        ldm: Option<PathBuf>,
    },
    TrainLdm(TrainLdm),
    /// Train a sequence model on a shard set.
    TrainAr {
        #[arg(long)]
        shards: PathBuf,
    },
    /// Train the code inverse-dynamics classifier on labelled games.
    TrainIdm {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        ldm: PathBuf,
        /// Labelled transitions to use (0 = all).
        #[arg(long, default_value_t = 0)]
        limit: usize,
    },
    /// Round robin between agents, with Elo fit.
    Tournament {
        /// Agent spec, repeatable: `[name=]random|teacher[:eps]|gtp[:cmd]|ar:<ckpt>[,<idm>]`.
        #[arg(long = "agent", required = true)]
        agents: Vec<String>,
    },
    /// Score one agent on a curated test set.
    Eval {
        #[arg(long)]
        agent: String,
        #[arg(long)]
        test: PathBuf,
    },
    /// Unique-state and repetition statistics of a store.
    Stats {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Combine eval rows and ratings into the comparison table.
    Report {
        #[arg(long = "row", required = true)]
        rows: Vec<PathBuf>,
        #[arg(long)]
        ratings: Option<PathBuf>,
    },
    /// Run an experiment config (`desk-go` names the bundled one).
    Run {
        #[arg(default_value = "desk-go")]
        experiment: String,
    },
    #[command(hide = true)]
    FakeEngine {
        /// JSON list of transcript entries; without it the engine plays by the rules.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
}

/// Train the latent dynamics model on the games of a store.
#[derive(Args)]
struct TrainLdm {
    #[arg(long)]
    store: PathBuf,
    /// Also write latent vectors of the first N clips to codes.csv.
    #[arg(long, default_value_t = 0)]
    dump_codes: usize,
}

fn out_or(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_vec_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

/// Effective configuration echoed beside an output.
fn echo_config(config: &PipelineConfig, target: &Path) -> Result<()> {
    let path = if target.is_dir() {
        target.join("config.toml")
    } else {
        let mut name = target.file_name().unwrap_or_default().to_os_string();
        name.push(".config.toml");
        target.with_file_name(name)
    };
    fs::write(path, toml::to_string(config)?)?;
    Ok(())
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

fn load_ldm(path: &Path) -> Result<Ldm> {
    Ok(Ldm::load(&mut BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))?)
}

fn losses_csv(path: &Path, losses: &[f64]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "step,loss")?;
    for (i, l) in losses.iter().enumerate() {
        writeln!(out, "{},{l}", i + 1)?;
    }
    out.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Command::FakeEngine { transcript } = &cli.command {
        let mut engine = match transcript {
            Some(p) => {
                let entries: Vec<TranscriptEntry> = serde_json::from_slice(&fs::read(p)?)?;
                ScriptedEngine::transcript(entries)
            }
            None => ScriptedEngine::rules(),
        };
        serve(&mut engine, std::io::stdin().lock(), std::io::stdout().lock())?;
        return Ok(());
    }
    if let Command::Run { experiment } = &cli.command {
        let mut config: ExperimentConfig = if experiment == "desk-go" && !Path::new(experiment).exists() {
            desk_go()
        } else {
            toml::from_str(&fs::read_to_string(experiment).with_context(|| format!("reading {experiment}"))?)?
        };
        if let Some(s) = cli.seed {
            config.seed = s;
        }
        let outcome = run_experiment(&config, &out_or(&cli, "runs"))?;
        print!("{}", outcome.report.table());
        println!("artifacts: {}", outcome.dir.display());
        return Ok(());
    }
    let config = PipelineConfig::load(cli.config.as_deref())?.with_seed(cli.seed);
    match &cli.command {
        Command::Ingest { paths } => {
            let out = out_or(&cli, "store.jsonl");
            let got = ingest(paths, &config.ingest)?;
            write_store(&out, &got.records)?;
            echo_config(&config, &out)?;
            println!(
                "{}",
                serde_json::json!({
                    "records": got.records.len(),
                    "errors": got.errors.len(),
                    "filtered": got.filtered,
                    "sha256": store_hash(&got.records)?,
                })
            );
        }
        Command::Annotate { store, engine } => {
            let out = out_or(&cli, "annotated.jsonl");
            let mut records = read_store(store)?;
            let command = engine_command(engine.as_deref().or(config.annotate.engine.as_deref()))?;
            let mut sessions = (0..cli.workers.max(1))
                .map(|_| {
                    let mut s = open_session(&command)?;
                    s.set_analysis_command(&config.annotate.analysis_command);
                    Ok(s)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut marks = out.clone().into_os_string();
            marks.push(".marks");
            let report = annotate(&mut records, &mut sessions, config.annotate.visits, Some(Path::new(&marks)))?;
            for s in sessions {
                let _ = s.quit();
            }
            write_store(&out, &records)?;
            echo_config(&config, &out)?;
            println!(
                "{}",
                serde_json::json!({
                    "annotated": report.annotated,
                    "resumed": report.resumed,
                    "failed": report.failed,
                })
            );
        }
        Command::Curate { store } => {
            let out = out_or(&cli, "test.jsonl");
            let states = curate(&read_store(store)?, &config.curate, config.seed)?;
            write_jsonl(&out, &states)?;
            echo_config(&config, &out)?;
            println!("{}", serde_json::json!({ "states": states.len() }));
        }
        Command::Render { store, game, games } => {
            let out = out_or(&cli, "frames");
            fs::create_dir_all(&out)?;
            let records = read_store(store)?;
            if *game >= records.len() {
                bail!("store holds {} games", records.len());
            }
            let mut written = 0;
            for (g, r) in records.iter().enumerate().skip(*game).take(*games) {
                for (t, s) in r.replay()?.iter().enumerate() {
                    let path = out.join(format!("game{g:05}-{t:03}.png"));
                    render(s, &config.render).write_png(BufWriter::new(File::create(&path)?))?;
                    written += 1;
                }
            }
            echo_config(&config, &out)?;
            println!("{}", serde_json::json!({ "frames": written }));
        }
        Command::Shards { store, ldm } => {
            let out = out_or(&cli, "shards");
            let records = read_store(store)?;
            let size = records.first().map(|r| r.size).ok_or_else(|| anyhow!("empty store"))?;
            let model = ldm.as_deref().map(load_ldm).transpose()?;
            let (horizon, latent) = match &model {
                Some(m) => (m.config.horizon, m.config.fsq.codebook_size() as u32),
                None => (config.sequence.horizon, 0),
            };
            let spec = SequenceSpec::new(config.sequence.mode, size, horizon, latent);
            let with_hash = match (&model, ldm) {
                (Some(m), Some(p)) => Some((m, file_hash(p)?)),
                _ => None,
            };
            let manifest = build_shards(&records, with_hash, &spec, &config.shards, cli.workers, &out)?;
            echo_config(&config, &out)?;
            println!(
                "{}",
                serde_json::json!({ "windows": manifest.windows, "games": manifest.games, "tokens": manifest.tokens })
            );
        }
        Command::TrainLdm(args) => {
            let out = out_or(&cli, "ldm");
            fs::create_dir_all(&out)?;
            let records = read_store(&args.store)?;
            let mut lc = config.ldm.clone();
            lc.board_size = records.first().map(|r| r.size).ok_or_else(|| anyhow!("empty store"))?;
            let mut clips = Vec::new();
            for r in &records {
                let frames = r
                    .replay()?
                    .iter()
                    .map(|s| grid_input(&tokenize_state(s), &lc))
                    .collect::<Result<Vec<_>, _>>()?;
                clips.extend(clip_frames(&frames, lc.clip_len));
            }
            let (model, losses) = train_ldm(&clips, &lc, |_, _, _| {})?;
            model.save(&mut BufWriter::new(File::create(out.join("ldm.ckpt"))?))?;
            losses_csv(&out.join("losses.csv"), &losses)?;
            if args.dump_codes > 0 {
                let mut csv = BufWriter::new(File::create(out.join("codes.csv"))?);
                for (i, clip) in clips.iter().take(args.dump_codes).enumerate() {
                    model.encode(clip)?.write_csv(i, i == 0, &mut csv)?;
                }
                csv.flush()?;
            }
            echo_config(&PipelineConfig { ldm: lc, ..config.clone() }, &out)?;
            println!(
                "{}",
                serde_json::json!({ "clips": clips.len(), "initial_loss": losses.first(), "final_loss": losses.last() })
            );
        }
        Command::TrainAr { shards } => {
            let out = out_or(&cli, "ar");
            fs::create_dir_all(&out)?;
            let (manifest, _) = load_shards(shards)?;
            let seq_path = shards.join(&manifest.sequences.file);
            if file_hash(&seq_path)? != manifest.sequences.sha256 {
                bail!("{} does not match its manifest hash", seq_path.display());
            }
            let corpus = read_corpus(&mut BufReader::new(File::open(&seq_path)?))?;
            let mut ac = config.ar.clone();
            ac.model.vocab = manifest.spec.vocab();
            let (model, losses) = train_ar(&corpus, &ac, |_, _, _| {})?;
            model.save(
                &mut BufWriter::new(File::create(out.join("ar.ckpt"))?),
                serde_json::json!({ "spec": manifest.spec }),
            )?;
            losses_csv(&out.join("losses.csv"), &losses)?;
            echo_config(&PipelineConfig { ar: ac, ..config.clone() }, &out)?;
            println!(
                "{}",
                serde_json::json!({ "sequences": corpus.len(), "initial_loss": losses.first(), "final_loss": losses.last() })
            );
        }
        Command::TrainIdm { store, ldm, limit } => {
            let out = out_or(&cli, "idm.ckpt");
            let model = load_ldm(ldm)?;
            let records = read_store(store)?;
            let mut examples = Vec::new();
            'games: for r in &records {
                let states = r.replay()?;
                let frames = states
                    .iter()
                    .map(|s| grid_input(&tokenize_state(s), &model.config))
                    .collect::<Result<Vec<_>, _>>()?;
                let codes = model.encode(&frames)?.indices;
                for t in 0..states.len() - 1 {
                    if *limit > 0 && examples.len() == *limit {
                        break 'games;
                    }
                    examples.push(IdmExample {
                        state: states[t].clone(),
                        codes: codes[t].clone(),
                        mv: r.moves[t],
                    });
                }
            }
            let mut idm = CodeIdm::new(
                model.config.board_size,
                model.config.horizon,
                model.config.fsq.codebook_size(),
                &config.idm,
            );
            let losses = idm.train(&examples, &config.idm)?;
            idm.save(&mut BufWriter::new(File::create(&out)?))?;
            echo_config(&config, &out)?;
            println!("{}", serde_json::json!({ "examples": examples.len(), "final_loss": losses.last() }));
        }
        Command::Tournament { agents } => {
            let out = out_or(&cli, "tournament");
            fs::create_dir_all(&out)?;
            let mut players = agents.iter().map(|a| parse_agent(a)).collect::<Result<Vec<_>>>()?;
            let results = run_tournament(&mut players, &config.tournament)?;
            write_jsonl(&out.join("results.jsonl"), &results)?;
            let anchor = match &config.rating.anchor {
                Some(a) => a.clone(),
                None => {
                    let mut names: Vec<String> = players.iter().map(|p| p.name()).collect();
                    names.sort();
                    names.remove(0)
                }
            };
            let table = fit_results(&results, &anchor, config.rating.anchor_value, config.rating.prior_weight)?;
            write_json(&out.join("ratings.json"), &table)?;
            echo_config(&config, &out)?;
            for r in &table.ratings {
                println!("{}\t{:.0} ± {:.0}", r.name, r.elo, r.uncertainty);
            }
        }
        Command::Eval { agent, test } => {
            let out = out_or(&cli, "eval.json");
            let tests: Vec<TestState> = read_jsonl(test)?;
            let labelled: Vec<(BoardState, AnnotatedMove)> = tests
                .iter()
                .map(|t| Ok((t.state()?, t.annotation.clone())))
                .collect::<Result<_>>()?;
            let states: Vec<BoardState> = labelled.iter().map(|(s, _)| s.clone()).collect();
            let mut player = parse_agent(agent)?;
            let mut row = AgentRow::new(&player.name());
            player.reset(config.seed);
            row.legal = Some(legal_rate(player.as_mut(), &states)?);
            player.reset(config.seed);
            row.accuracy = Some(action_accuracy(player.as_mut(), &labelled)?);
            player.reset(config.seed);
            // Moves the engine did not rank carry no value; the ratio is then undefined.
            row.action_value = agent_value_ratio(player.as_mut(), &labelled).ok();
            write_json(&out, &row)?;
            echo_config(&config, &out)?;
            println!("{}", serde_json::to_string(&row)?);
        }
        Command::Stats { store, reference } => {
            let out = out_or(&cli, "stats.json");
            let records = read_store(store)?;
            let reference = reference.as_deref().map(read_store).transpose()?;
            let hashes = reference.as_deref().map(reference_hashes).transpose()?;
            let stats = dataset_stats(&records, hashes.as_ref())?;
            write_json(&out, &stats)?;
            echo_config(&config, &out)?;
            println!(
                "{}",
                serde_json::json!({ "games": stats.games, "states": stats.total_states, "unique": stats.total_unique })
            );
        }
        Command::Report { rows, ratings } => {
            let out = out_or(&cli, "report.md");
            let rows = rows
                .iter()
                .map(|p| Ok(serde_json::from_slice::<AgentRow>(&fs::read(p)?)?))
                .collect::<Result<Vec<_>>>()?;
            let ratings: Option<RatingTable> = ratings
                .as_deref()
                .map(|p| -> Result<RatingTable> { Ok(serde_json::from_slice(&fs::read(p)?)?) })
                .transpose()?;
            let report = MetricsReport {
                rows,
                ratings,
                config: serde_json::to_value(&config)?,
            };
            fs::write(&out, report.table())?;
            fs::write(out.with_extension("csv"), report.csv())?;
            echo_config(&config, &out)?;
            print!("{}", report.table());
        }
        Command::Run { .. } | Command::FakeEngine { .. } => unreachable!("handled above"),
    }
    Ok(())
}
