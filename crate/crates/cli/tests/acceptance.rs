//! End-to-end acceptance checks, one line per criterion.
//!
//! `cargo test --test acceptance` runs all of them; pass criterion numbers
//! (`-- 3 7`) to run a subset.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{anyhow, ensure, Result};
use gobench_cli::experiment::{desk_go, run_experiment};
use gobench_cli::store::{ingest, IngestFilter};
use gobench_core::agent::{random_legal_move, Agent, AgentError, Decision, RandomAgent};
use gobench_core::go::{new_game, AnnotatedMove, BoardState, Cell, GameRecord, Move, Verdict, Winner};
use gobench_core::gtp::{GtpSession, ScriptedEngine, TranscriptEntry};
use gobench_core::render::{extract_move, tokenize_state};
use gobench_core::sgf::{from_record, parse, serialize, to_record};
use gobench_eval::{
    action_value_ratio, agent_value_ratio, dataset_stats, fit_elo, legal_rate, reference_hashes, run_tournament,
    Tally, TournamentConfig,
};
use gobench_ldm::input::{clip_frames, grid_input};
use gobench_ldm::{pad_window, train_ldm, Ldm, LdmConfig};
use gobench_nn::gradcheck::{grad_check, grad_check_vec, GradCheckConfig};
use gobench_nn::{
    adamw_step, attention, attention_backward, cross_entropy, mse, AdamConfig, AdamState, AttnShape, FsqMode,
    FsqSpec, Mask, MultiHeadAttention, ParamStore, Tensor,
};
use gobench_oracles::{
    brute_repetition_by_move, brute_unique_by_move, elo_gap_for_score, flood_fill_score, parse_grid, Grid, NaiveGame,
    RefVerdict,
};
use gobench_seq::{SeqMode, TinyTransformer, TransformerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/corpus9")
}

fn randv(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn fsq_arithmetic() -> Result<String> {
    let spec = FsqSpec::new(vec![8, 8, 8, 5, 5, 5])?;
    ensure!(spec.codebook_size() == 64_000, "codebook size {}", spec.codebook_size());
    for index in 0..64_000 {
        let code = spec.index_to_code(index)?;
        ensure!(spec.code_to_index(&code)? == index, "index {index} does not round-trip");
    }
    ensure!(spec.index_to_code(64_000).is_err());
    Ok("64000 codes, bijective".into())
}

fn tournament_bookkeeping() -> Result<String> {
    let mut agents: Vec<Box<dyn Agent>> =
        (0..8).map(|i| Box::new(RandomAgent::new(&format!("r{i}"))) as Box<dyn Agent>).collect();
    let config = TournamentConfig::default();
    ensure!(config.games_per_pair == 400 && config.move_cap == 200);
    let results = run_tournament(&mut agents, &config)?;
    ensure!(results.len() == 11_200, "{} games", results.len());
    let mut colours: BTreeMap<(String, String), usize> = BTreeMap::new();
    for r in &results {
        ensure!(r.moves.len() <= 200, "game exceeded the move cap");
        *colours.entry((r.black.clone(), r.white.clone())).or_default() += 1;
    }
    ensure!(colours.len() == 56 && colours.values().all(|&n| n == 200), "unbalanced colours");
    Ok(format!("{} games, 200 per colour per pair", results.len()))
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i}")).collect()
}

fn elo_analytics() -> Result<String> {
    let mut sym = Tally::new(names(2));
    sym.add(0, 1, 50.0, 100.0);
    let r = fit_elo(&sym, "p1", 0.0, 2.0)?;
    ensure!(r.get("p0").unwrap().elo == 0.0, "symmetric gap {}", r.get("p0").unwrap().elo);

    let mut split = Tally::new(names(2));
    split.add(0, 1, 75.0, 100.0);
    let gap = fit_elo(&split, "p1", 0.0, 0.0)?.get("p0").unwrap().elo;
    let expected = 400.0 * 3f64.log10();
    ensure!((expected - elo_gap_for_score(0.75)).abs() < 1e-12);
    ensure!((gap - 190.849).abs() < 0.01, "75/25 gap {gap}");

    let truth = [0.0, 100.0, 200.0, 300.0];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut t = Tally::new(names(4));
    for i in 0..4 {
        for j in i + 1..4 {
            let p = 1.0 / (1.0 + 10f64.powf((truth[j] - truth[i]) / 400.0));
            let wins = (0..10_000).filter(|_| rng.gen_bool(p)).count();
            t.add(i, j, wins as f64, 10_000.0);
        }
    }
    let fit = fit_elo(&t, "p0", 0.0, 0.0)?;
    ensure!(fit.get("p0").unwrap().elo == 0.0, "anchor moved");
    let mut worst: f64 = 0.0;
    for (i, want) in truth.iter().enumerate() {
        worst = worst.max((fit.get(&format!("p{i}")).unwrap().elo - want).abs());
    }
    ensure!(worst < 15.0, "planted ratings off by {worst:.1}");
    Ok(format!("75/25 gap {gap:.4}, planted max error {worst:.2}"))
}

fn same_verdict(a: Verdict, b: RefVerdict) -> bool {
    matches!(
        (a, b),
        (Verdict::Legal, RefVerdict::Legal)
            | (Verdict::Occupied, RefVerdict::Occupied)
            | (Verdict::Suicide, RefVerdict::Suicide)
            | (Verdict::Superko, RefVerdict::Superko)
            | (Verdict::OutOfBounds, RefVerdict::OutOfBounds)
    )
}

/// Returns the number of moves compared.
fn compare_playout(seed: u64) -> Result<usize> {
    let size = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = new_game(size, 7.0)?;
    let mut naive = NaiveGame::new(size);
    let mut moves = 0;
    while !state.is_over() && moves < 150 {
        for row in 0..size {
            for col in 0..size {
                let v = state.is_legal(Move::place(col, row));
                ensure!(same_verdict(v, naive.verdict(col, row)), "seed {seed}: verdict at ({col},{row})");
            }
        }
        let legal = state.legal_moves()?;
        let places = legal.len() - 1;
        let mv = if places == 0 || rng.gen_bool(0.05) {
            Move::Pass
        } else {
            legal[rng.gen_range(0..places)]
        };
        state = state.play(mv)?;
        match mv {
            Move::Place { col, row } => naive.play(col as usize, row as usize).map_err(|e| anyhow!("{e:?}"))?,
            _ => naive.pass(),
        }
        ensure!(state.dump() == naive.dump(), "seed {seed}: boards diverged");
        moves += 1;
    }
    let signed = flood_fill_score(&parse_grid(&naive.dump()), 7.0);
    let result = state.score(7.0);
    let winner = match signed {
        s if s > 0.0 => Winner::Black,
        s if s < 0.0 => Winner::White,
        _ => Winner::Draw,
    };
    ensure!(result.winner == winner && result.margin == Some(signed.abs()), "seed {seed}: score");
    Ok(moves)
}

fn rules_oracle() -> Result<String> {
    let mut moves = 0;
    for seed in 0..10_000 {
        moves += compare_playout(seed)?;
    }
    Ok(format!("10000 playouts, {moves} moves, 0 disagreements"))
}

fn gradient_checks() -> Result<String> {
    let cfg = GradCheckConfig::default();
    let mut worst: Vec<(&str, f64)> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let shape = AttnShape { t: 3, s: 4, d: 4, heads: 2 };
    let (q, k, v, w) = (randv(&mut rng, 12), randv(&mut rng, 16), randv(&mut rng, 16), randv(&mut rng, 12));
    let mut e: f64 = 0.0;
    for mask in [Mask::None, Mask::Causal, Mask::Limits(vec![1, 3, 2])] {
        let (_, probs) = attention(&q, &k, &v, shape, &mask)?;
        let (dq, dk, dv) = attention_backward(&q, &k, &v, &probs, &w, shape);
        let f = |q: &[f64], k: &[f64], v: &[f64]| dot(&attention(q, k, v, shape, &mask).unwrap().0, &w);
        e = e
            .max(grad_check_vec(&q, &dq, &mut |x| f(x, &k, &v), &cfg))
            .max(grad_check_vec(&k, &dk, &mut |x| f(&q, x, &v), &cfg))
            .max(grad_check_vec(&v, &dv, &mut |x| f(&q, &k, x), &cfg));
    }
    let mut store = ParamStore::new();
    let mha = MultiHeadAttention::new(&mut store, "mha", 8, 2, None, &mut rng);
    let (xq, xkv, wy) = (randv(&mut rng, 24), randv(&mut rng, 40), randv(&mut rng, 24));
    let mask = Mask::Limits(vec![2, 5, 4]);
    let report = grad_check(
        &mut store,
        &mut |s| {
            let (y, cache) = mha.forward(s, &xq, &xkv, &mask).unwrap();
            mha.backward(s, &cache, &wy);
            dot(&y, &wy)
        },
        &mut |s| dot(&mha.forward(s, &xq, &xkv, &mask).unwrap().0, &wy),
        &cfg,
    );
    worst.push(("attention", e.max(report.max_rel_error)));

    let logits = randv(&mut rng, 20);
    let (targets, keep) = ([0, 3, 4, 1], [true, false, true, true]);
    let (_, g) = cross_entropy(&logits, 5, &targets, &keep)?;
    worst.push((
        "cross-entropy",
        grad_check_vec(&logits, &g, &mut |x| cross_entropy(x, 5, &targets, &keep).unwrap().0, &cfg),
    ));
    let (p, t) = (randv(&mut rng, 7), randv(&mut rng, 7));
    let (_, g) = mse(&p, &t)?;
    worst.push(("mse", grad_check_vec(&p, &g, &mut |x| mse(x, &t).unwrap().0, &cfg)));

    // AdamW: one step against the update written out by hand.
    let mut store = ParamStore::new();
    let id = store.add("x", Tensor::from_vec(&[1], vec![0.8])?);
    store.grad_mut(id)[0] = -0.3;
    let adam = AdamConfig {
        lr: 0.01,
        beta1: 0.9,
        beta2: 0.999,
        eps: 1e-8,
        weight_decay: 0.1,
        warmup: 0,
        max_steps: 10,
        min_lr_ratio: 0.0,
    };
    let mut st = AdamState::new(&store);
    adamw_step(&mut store, &mut st, &adam)?;
    let lr1 = 0.01 * 0.5 * (1.0 + (std::f64::consts::PI / 10.0).cos());
    let expected = 0.8 - lr1 * (-0.3 / (0.3 + 1e-8) + 0.1 * 0.8);
    worst.push(("adamw", (store.get(id)[0] - expected).abs() / expected.abs()));

    let ldm_cfg = LdmConfig {
        horizon: 2,
        clip_len: 4,
        board_size: 3,
        dim: 8,
        heads: 2,
        grid: 3,
        head_hidden: 8,
        decoder_hidden: 8,
        decoder_layers: 2,
        first_frame_skip: true,
        fsq: FsqSpec::new(vec![5, 4, 3])?,
        seed: 11,
        ..LdmConfig::default()
    };
    let model = Ldm::new(ldm_cfg.clone())?;
    let window: Vec<Vec<f64>> = (0..ldm_cfg.window_len()).map(|_| randv(&mut rng, ldm_cfg.frame_len())).collect();
    let mut store = model.store.clone();
    let report = grad_check(
        &mut store,
        &mut |s| {
            s.zero_grad();
            let (out, cache) = model.forward_in(s, &window, FsqMode::Relaxed).unwrap();
            model.backward_in(s, &cache, 1.0);
            out.loss
        },
        &mut |s| model.forward_in(s, &window, FsqMode::Relaxed).unwrap().0.loss,
        &GradCheckConfig {
            max_per_param: 40,
            ..cfg.clone()
        },
    );
    worst.push(("ldm", report.max_rel_error));

    let mut tf = TinyTransformer::new(TransformerConfig {
        layers: 2,
        dim: 16,
        heads: 2,
        context: 64,
        mlp_hidden: 32,
        vocab: 9,
        seed: 3,
    })?;
    let mut flat = tf.store.flatten();
    for x in &mut flat {
        *x += rng.gen_range(-0.3..0.3);
    }
    tf.store.assign_flat(&flat);
    let ids = [8, 1, 2, 0, 5, 7, 3, 3, 1];
    let keep = [false, true, true, false, true, true, true, true, true];
    let mut store = tf.store.clone();
    let report = grad_check(
        &mut store,
        &mut |s| {
            s.zero_grad();
            let (_, loss, cache) = tf.forward_in(s, &ids, &keep).unwrap();
            tf.backward_in(s, &cache, 1.0);
            loss
        },
        &mut |s| tf.forward_in(s, &ids, &keep).unwrap().1,
        &GradCheckConfig {
            max_per_param: 40,
            ..cfg.clone()
        },
    );
    worst.push(("transformer", report.max_rel_error));

    let detail = worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect::<Vec<_>>().join(", ");
    ensure!(worst.iter().all(|(_, e)| *e < 1e-4), "{detail}");
    Ok(detail)
}

fn mean_loss(model: &Ldm, clips: &[Vec<Vec<f64>>]) -> Result<f64> {
    let mut total = 0.0;
    let mut n = 0;
    for clip in clips {
        for t in 1..=clip.len() {
            total += model.forward(&pad_window(clip, t, model.config.horizon)?, FsqMode::Quantize)?.0.loss;
            n += 1;
        }
    }
    Ok(total / n as f64)
}

fn ldm_training() -> Result<String> {
    let mut cfg = LdmConfig::default();
    cfg.adam.lr = 1e-3;
    ensure!(cfg.steps == 2000 && cfg.adam.max_steps == 2000 && cfg.board_size == 9);
    let records = ingest(&[corpus()], &IngestFilter::default())?.records;
    let mut clips = Vec::new();
    for r in &records {
        let frames = r
            .replay()?
            .iter()
            .map(|s| grid_input(&tokenize_state(s), &cfg))
            .collect::<Result<Vec<_>, _>>()?;
        clips.extend(clip_frames(&frames, cfg.clip_len));
    }
    let initial = mean_loss(&Ldm::new(cfg.clone())?, &clips)?;
    let (model, losses) = train_ldm(&clips, &cfg, |_, _, _| {})?;
    let fin = mean_loss(&model, &clips)?;
    let (again, losses_again) = train_ldm(&clips, &cfg, |_, _, _| {})?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    model.save(&mut a)?;
    again.save(&mut b)?;
    ensure!(losses == losses_again && a == b, "reruns differ");
    let ratio = fin / initial;
    ensure!(ratio < 0.1, "loss {initial:.4} -> {fin:.4}, ratio {ratio:.3}");
    Ok(format!(
        "{} clips, dataset loss {initial:.4} -> {fin:.4} (ratio {ratio:.3}); batch {:.4} -> {:.4}; reruns identical",
        clips.len(),
        losses[0],
        losses[losses.len() - 1]
    ))
}

fn knowledge_ordering(stash: &mut Option<gobench_cli::knowledge::KnowledgeReport>) -> Result<String> {
    let root = tempfile::tempdir()?;
    let outcome = run_experiment(&desk_go(), root.path())?;
    let k = outcome.knowledge;
    let get = |m| k.mode(m).ok_or_else(|| anyhow!("mode {m:?} missing"));
    let (fo, co, cf) = (get(SeqMode::FramesOnly)?, get(SeqMode::CodesOnly)?, get(SeqMode::CodesAndFrames)?);
    let detail = format!(
        "legal c&f {:.1}%; accuracy c&f {:.1}% / codes {:.1}% / frames {:.1}%",
        cf.legal.percent(),
        cf.accuracy.percent(),
        co.accuracy.percent(),
        fo.accuracy.percent()
    );
    let ordered = cf.accuracy.hits >= co.accuracy.hits && co.accuracy.hits > fo.accuracy.hits;
    *stash = Some(k.clone());
    ensure!(cf.legal.percent() >= 90.0 && ordered, "{detail}");
    Ok(detail)
}

fn intervention_ordering(stash: &Option<gobench_cli::knowledge::KnowledgeReport>) -> Result<String> {
    let k = stash.as_ref().ok_or_else(|| anyhow!("needs the model from criterion 7"))?;
    let horizon = desk_go().knowledge.ldm.horizon;
    let acc = |l: &str| k.intervention(l).map(|c| c.hits).ok_or_else(|| anyhow!("no intervention row {l}"));
    let (first, last, all) = (acc("1")?, acc(&horizon.to_string())?, acc("All")?);
    let mut singles = Vec::new();
    for i in 1..=horizon {
        singles.push(acc(&i.to_string())?);
    }
    let detail = format!(
        "hits None {} / 1 {first} / {horizon} {last} / All {all} of {}",
        acc("None")?,
        k.intervention("None").unwrap().total
    );
    ensure!(first <= last && singles.iter().all(|&s| all <= s), "{detail}");
    Ok(detail)
}

struct Script(Vec<Decision>);

impl Agent for Script {
    fn name(&self) -> String {
        "script".into()
    }

    fn decide(&mut self, _: &[BoardState]) -> Result<Decision, AgentError> {
        Ok(self.0.remove(0))
    }
}

fn random_states(size: usize, count: usize, max_moves: usize, seed: u64) -> Result<Vec<BoardState>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut s = new_game(size, 7.0)?;
        for _ in 0..rng.gen_range(0..max_moves) {
            s = s.play(random_legal_move(&s, &mut rng))?;
            if s.is_over() {
                break;
            }
        }
        if !s.is_over() {
            out.push(s);
        }
    }
    Ok(out)
}

fn idm_exactness() -> Result<String> {
    let mut checked = 0;
    for s in random_states(9, 1000, 60, 6)? {
        let before = tokenize_state(&s);
        for mv in s.legal_moves()? {
            let after = tokenize_state(&s.play(mv)?);
            let got = extract_move(&before, &after, s.to_move())?;
            ensure!(got == mv, "recovered {got:?} for {mv:?}");
            checked += 1;
        }
    }
    let states = random_states(5, 10, 12, 1)?;
    let mut decisions: Vec<Decision> = states.iter().map(|_| Decision::legal(Move::Pass)).collect();
    decisions[4].raw_legal = false;
    let rate = legal_rate(&mut Script(decisions), &states)?;
    ensure!(rate.percent() == 90.0, "fixture legal rate {}", rate.percent());
    Ok(format!("{checked} transitions recovered; fixture legal rate {:.1}%", rate.percent()))
}

fn protocol_conformance() -> Result<String> {
    let engine = ScriptedEngine::transcript(vec![
        TranscriptEntry::ok("clear_board", ""),
        TranscriptEntry::ok("boardsize 9", ""),
        TranscriptEntry::ok("komi 7", ""),
        TranscriptEntry::ok("play B E5", ""),
        TranscriptEntry::ok("play W C3", ""),
        TranscriptEntry::ok("genmove B", "G7"),
        TranscriptEntry::ok(
            "kata-analyze 200",
            "info move E5 visits 120 winrate 0.61 scoreLead 2.4 order 0 pv E5 D4 \
             info move D4 visits 40 winrate 0.55 scoreLead 1.1 order 1 pv D4 E5 \
             info move pass visits 8 winrate 0.12 scoreLead -9.5 order 2",
        ),
    ]);
    let mut s = GtpSession::with_transport(Box::new(engine), Duration::from_secs(1))?;
    s.setup_moves(9, 7.0, &[Move::place(4, 4), Move::place(2, 6)])?;
    ensure!(s.genmove(gobench_core::go::Color::Black, 9)? == Move::place(6, 2));
    let lines = s.analyze(200, 9)?;
    let log = String::from_utf8(s.request_log().to_vec())?;
    let expected = "1 protocol_version\n2 name\n3 version\n4 clear_board\n5 boardsize 9\n6 komi 7\n\
                    7 play B E5\n8 play W C3\n9 genmove B\n10 kata-analyze 200\n";
    ensure!(log == expected, "request log {log:?}");
    let got: Vec<(Move, u64, f64, f64, u32)> =
        lines.iter().map(|l| (l.mv, l.visits, l.winrate, l.score_lead, l.order)).collect();
    ensure!(
        got == vec![
            (Move::place(4, 4), 120, 0.61, 2.4, 0),
            (Move::place(3, 5), 40, 0.55, 1.1, 1),
            (Move::Pass, 8, 0.12, -9.5, 2),
        ],
        "analysis {got:?}"
    );

    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus())?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    files.sort();
    ensure!(files.len() == 100);
    for f in &files {
        let parsed = parse(&std::fs::read_to_string(f)?)?;
        ensure!(parse(&serialize(&parsed))? == parsed, "{} is not a fixed point", f.display());
        let record = to_record(&parsed.trees[0], 7.0)?;
        ensure!(to_record(&from_record(&record), 7.0)?.moves == record.moves);
    }
    Ok(format!("request log byte-exact, {} analysis lines, 100 SGF fixed points", lines.len()))
}

fn grid(s: &BoardState) -> Grid {
    let n = s.size();
    (0..n)
        .map(|r| {
            (0..n)
                .map(|c| match s.get(c, r) {
                    Cell::Empty => '.',
                    Cell::Black => 'X',
                    Cell::White => 'O',
                })
                .collect()
        })
        .collect()
}

fn synthetic(games: usize, seed: u64) -> Result<Vec<GameRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..games)
        .map(|_| {
            let mut s = new_game(3, 7.0)?;
            let mut moves = Vec::new();
            for _ in 0..rng.gen_range(0..30) {
                if s.is_over() {
                    break;
                }
                let mv = if rng.gen_bool(0.05) { Move::Pass } else { random_legal_move(&s, &mut rng) };
                s = s.play(mv)?;
                moves.push(mv);
            }
            Ok(GameRecord::new(3, 7.0, Default::default(), moves))
        })
        .collect()
}

fn dataset_statistics() -> Result<String> {
    let games = synthetic(1000, 11)?;
    let reference = synthetic(300, 12)?;
    let stats = dataset_stats(&games, Some(&reference_hashes(&reference)?))?;
    let grids = |rs: &[GameRecord]| -> Result<Vec<Vec<Grid>>> {
        rs.iter().map(|r| Ok(r.replay()?.iter().map(grid).collect())).collect()
    };
    let game_grids = grids(&games)?;
    ensure!(stats.unique_by_move == brute_unique_by_move(&game_grids), "unique counts differ");
    let ref_grids: Vec<Grid> = grids(&reference)?.into_iter().flatten().collect();
    let rates = stats.repetition_by_move.as_ref().ok_or_else(|| anyhow!("no repetition rates"))?;
    ensure!(rates == &brute_repetition_by_move(&game_grids, &ref_grids), "repetition rates differ");
    Ok(format!("{} states, {} unique, exact", stats.total_states, stats.total_unique))
}

fn value_ratio_semantics() -> Result<String> {
    let states = random_states(5, 20, 12, 3)?;
    let annotated: Vec<(BoardState, AnnotatedMove)> = states
        .iter()
        .map(|s| {
            let legal = s.legal_moves()?;
            let best = legal[0];
            let values: BTreeMap<Move, f64> =
                legal.iter().map(|&m| (m, if m == best { 0.7 } else { 0.35 })).collect();
            Ok((s.clone(), AnnotatedMove::new(best, best, values)?))
        })
        .collect::<Result<_>>()?;
    let oracle = annotated.iter().map(|(_, a)| Decision::legal(a.best)).collect();
    let full = agent_value_ratio(&mut Script(oracle), &annotated)?.percent;
    ensure!(full == 100.0, "oracle scored {full}");
    let values: BTreeMap<Move, f64> = [(Move::place(0, 0), 0.8), (Move::place(1, 1), 0.4)].into_iter().collect();
    let a = AnnotatedMove::new(Move::place(0, 0), Move::place(0, 0), values)?;
    let two = action_value_ratio(&[(Move::place(0, 0), a.clone()), (Move::place(1, 1), a)])?.percent;
    ensure!(two == 75.0, "two-move fixture scored {two}");
    Ok(format!("oracle {full:.1}%, fixture {two:.1}%"))
}

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |n: usize| wanted.is_empty() || wanted.contains(&n) || (n == 7 && wanted.contains(&8));
    let mut stash = None;
    let mut failed = 0;
    let mut report = |n: usize, name: &str, f: &mut dyn FnMut() -> Result<String>| {
        if !run(n) {
            return;
        }
        let start = Instant::now();
        let result = f();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail} [{secs:.1}s]"),
            Err(e) => {
                failed += 1;
                println!("FAIL {n:>2} {name}: {e:#} [{secs:.1}s]");
            }
        }
    };
    report(1, "fsq arithmetic", &mut fsq_arithmetic);
    report(2, "tournament bookkeeping", &mut tournament_bookkeeping);
    report(3, "elo analytics", &mut elo_analytics);
    report(4, "rules oracle", &mut rules_oracle);
    report(5, "gradient checks", &mut gradient_checks);
    report(6, "ldm training", &mut ldm_training);
    report(7, "knowledge ordering", &mut || knowledge_ordering(&mut stash));
    report(8, "intervention ordering", &mut || intervention_ordering(&stash));
    report(9, "idm exactness", &mut idm_exactness);
    report(10, "protocol conformance", &mut protocol_conformance);
    report(11, "dataset statistics", &mut dataset_statistics);
    report(12, "action-value ratio", &mut value_ratio_semantics);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
