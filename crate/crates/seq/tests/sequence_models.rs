use std::sync::Arc;

use gobench_core::agent::{Agent, GreedyCaptureTeacher, RandomAgent};
use gobench_core::go::{new_game, BoardState, Move};
use gobench_core::render::{tokenize_state, TokenGrid};
use gobench_nn::gradcheck::{grad_check, GradCheckConfig};
use gobench_nn::AdamConfig;
use gobench_seq::corpus::{read_corpus, write_corpus};
use gobench_seq::generate::TfPredictor;
use gobench_seq::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn perturbed(config: TransformerConfig, seed: u64) -> TinyTransformer {
    let mut m = TinyTransformer::new(config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flat = m.store.flatten();
    for v in &mut flat {
        *v += rng.gen_range(-0.3..0.3);
    }
    m.store.assign_flat(&flat);
    m
}

fn small_config(vocab: usize) -> TransformerConfig {
    TransformerConfig {
        layers: 2,
        dim: 16,
        heads: 2,
        context: 64,
        mlp_hidden: 32,
        vocab,
        seed: 3,
    }
}

#[test]
fn two_layer_gradients_match_finite_differences() {
    let model = perturbed(small_config(9), 1);
    let ids = [8, 1, 2, 0, 5, 7, 3, 3, 1];
    let mask = [false, true, true, false, true, true, true, true, true];
    let mut store = model.store.clone();
    let report = grad_check(
        &mut store,
        &mut |s| {
            s.zero_grad();
            let (_, loss, cache) = model.forward_in(s, &ids, &mask).unwrap();
            model.backward_in(s, &cache, 1.0);
            loss
        },
        &mut |s| model.forward_in(s, &ids, &mask).unwrap().1,
        &GradCheckConfig {
            max_per_param: 40,
            ..GradCheckConfig::default()
        },
    );
    assert!(report.passed, "{report}");
}

#[test]
fn logits_are_causal() {
    let model = perturbed(small_config(9), 2);
    let ids = vec![8, 1, 2, 0, 5, 7, 3, 3, 1, 4];
    let base = model.logits(&ids).unwrap();
    for j in 0..ids.len() {
        let mut p = ids.clone();
        p[j] = (p[j] + 1) % 9;
        let out = model.logits(&p).unwrap();
        assert_eq!(out[..j * 9], base[..j * 9], "j={j}");
        assert_ne!(out[j * 9..(j + 1) * 9], base[j * 9..(j + 1) * 9]);
    }
}

#[test]
fn kv_cache_matches_full_forward() {
    let model = perturbed(small_config(9), 3);
    let ids = [8, 1, 2, 0, 5, 7, 3, 3, 1, 4];
    let full = model.logits(&ids).unwrap();
    let mut cache = model.start();
    for (i, &t) in ids.iter().enumerate() {
        let step = model.step(&mut cache, t).unwrap();
        for (a, b) in step.iter().zip(&full[i * 9..(i + 1) * 9]) {
            assert!((a - b).abs() < 1e-10);
        }
    }
    assert_eq!(cache.len(), ids.len());
}

fn spec5(mode: SeqMode) -> SequenceSpec {
    SequenceSpec::new(mode, 5, 3, 27)
}

fn random_grid(rng: &mut ChaCha8Rng, size: usize) -> TokenGrid {
    TokenGrid {
        size,
        tokens: (0..size * size).map(|_| rng.gen_range(0..3)).collect(),
    }
}

#[test]
fn intervention_none_is_plain_greedy() {
    let spec = spec5(SeqMode::CodesAndFrames);
    let model = perturbed(small_config(spec.vocab()), 4);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let prompt = spec.prompt(&random_grid(&mut rng, 5)).unwrap();
    let a = generate(&mut TfPredictor::new(&model), &prompt, &spec, Policy::Greedy, &InterventionSpec::none()).unwrap();

    // manual greedy over full forwards with region masking
    let mut ids = prompt.clone();
    for j in 0..spec.step_len() {
        let logits = model.logits(&ids).unwrap();
        let row = &logits[(ids.len() - 1) * spec.vocab()..];
        let (lo, hi) = if spec.step_region(j) == Region::Latent {
            (spec.frame_vocab, spec.frame_vocab + spec.latent_vocab)
        } else {
            (0, spec.frame_vocab)
        };
        let mut best = lo;
        for t in lo..hi {
            if row[t as usize] > row[best as usize] {
                best = t;
            }
        }
        ids.push(best);
    }
    assert_eq!(a, ids[prompt.len()..]);
    let again = generate(&mut TfPredictor::new(&model), &prompt, &spec, Policy::Greedy, &InterventionSpec::none()).unwrap();
    assert_eq!(a, again);
}

#[test]
fn intervention_all_draws_from_seeded_stream() {
    let spec = spec5(SeqMode::CodesAndFrames);
    let model = perturbed(small_config(spec.vocab()), 6);
    let prompt = spec.prompt(&TokenGrid::empty(5)).unwrap();
    let iv = InterventionSpec {
        targets: CodeTargets::All,
        seed: 99,
    };
    let out = generate(&mut TfPredictor::new(&model), &prompt, &spec, Policy::Greedy, &iv).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let expected: Vec<u32> = (0..3).map(|_| spec.latent_token(rng.gen_range(0..27))).collect();
    assert_eq!(out[..3], expected);

    let one = InterventionSpec {
        targets: CodeTargets::Indices(vec![2]),
        seed: 99,
    };
    let out1 = generate(&mut TfPredictor::new(&model), &prompt, &spec, Policy::Greedy, &one).unwrap();
    assert_eq!(out1[1], expected[0]);
    let bad = InterventionSpec {
        targets: CodeTargets::Indices(vec![4]),
        seed: 0,
    };
    assert!(generate(&mut TfPredictor::new(&model), &prompt, &spec, Policy::Greedy, &bad).is_err());
}

#[test]
fn misaligned_prompt_rejected() {
    let spec = spec5(SeqMode::FramesOnly);
    let model = perturbed(small_config(spec.vocab()), 7);
    let mut prompt = spec.prompt(&TokenGrid::empty(5)).unwrap();
    prompt.push(0);
    assert_eq!(
        generate(&mut TfPredictor::new(&model), &prompt, &spec, Policy::Greedy, &InterventionSpec::none()),
        Err(SeqError::MisalignedPrompt(27))
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generation_respects_regions(seed in 0u64..1000, tau in 0.2f64..3.0, mode in 0usize..3) {
        let mode = [SeqMode::FramesOnly, SeqMode::CodesOnly, SeqMode::CodesAndFrames][mode];
        let spec = spec5(mode);
        let model = perturbed(small_config(spec.vocab()), seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prompt = spec.prompt(&random_grid(&mut rng, 5)).unwrap();
        let iv = InterventionSpec { targets: CodeTargets::Indices(vec![1]), seed };
        let out = generate(&mut TfPredictor::new(&model), &prompt, &spec, Policy::Temperature { tau, seed }, &iv).unwrap();
        for (j, &t) in out.iter().enumerate() {
            prop_assert_eq!(spec.region(t), Some(spec.step_region(j)));
        }
        if mode != SeqMode::CodesOnly {
            prop_assert!(decode_step(&out, 5, &spec).is_ok());
        }
    }

    #[test]
    fn build_then_decode_is_identity(seed in 0u64..10_000, frames in 1usize..7, h in 1usize..5, mode in 0usize..3) {
        let mode = [SeqMode::FramesOnly, SeqMode::CodesOnly, SeqMode::CodesAndFrames][mode];
        let spec = SequenceSpec::new(mode, 4, h, 125);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grids: Vec<_> = (0..frames).map(|_| random_grid(&mut rng, 4)).collect();
        let codes: Vec<Vec<usize>> = (1..frames).map(|_| (0..h).map(|_| rng.gen_range(0..125)).collect()).collect();
        let s = build_sequence(&grids, &codes, &spec).unwrap();
        prop_assert_eq!(s.ids.len(), spec.sequence_len(frames));
        prop_assert_eq!(s.ids.len(), 1 + 16 + (frames - 1) * (spec.codes_per_step() + 16));
        prop_assert_eq!(s.steps.len(), frames - 1);
        for (t, &off) in s.steps.iter().enumerate() {
            let (c, g) = decode_step(&s.ids[off..off + spec.step_len()], 4, &spec).unwrap();
            if mode == SeqMode::FramesOnly {
                prop_assert!(c.is_empty());
            } else {
                prop_assert_eq!(&c, &codes[t]);
            }
            prop_assert_eq!(&g, &grids[t + 1]);
        }
    }
}

fn game_states(moves: usize, seed: u64) -> Vec<BoardState> {
    let mut agent = GreedyCaptureTeacher::new(0.3);
    agent.reset(seed);
    let mut history = vec![new_game(5, 7.0).unwrap()];
    for _ in 0..moves {
        let d = agent.decide(&history).unwrap();
        let next = history.last().unwrap().play(d.mv).unwrap();
        history.push(next);
        if history.last().unwrap().is_over() {
            break;
        }
    }
    history
}

fn pair_sequences(states: &[BoardState], spec: &SequenceSpec) -> Vec<Vec<u32>> {
    states
        .windows(2)
        .map(|w| {
            build_sequence(&[tokenize_state(&w[0]), tokenize_state(&w[1])], &[], spec)
                .unwrap()
                .ids
        })
        .collect()
}

#[test]
fn memorising_agent_replays_its_game() {
    let spec = SequenceSpec::new(SeqMode::FramesOnly, 5, 1, 1);
    let states = game_states(12, 1);
    let corpus = pair_sequences(&states, &spec);
    let ngram = NGram::fit(&corpus, 60, spec.vocab(), 1e-3).unwrap();
    let mut agent = SeqAgent::new("mem", Arc::new(ArModel::NGram(ngram)), spec, None, Policy::Greedy).unwrap();
    agent.reset(0);
    for t in 0..states.len() - 1 {
        let d = agent.decide(&states[..=t]).unwrap();
        assert!(d.raw_legal);
        assert_eq!(Some(d.mv), states[t + 1].last_move());
    }
}

#[test]
fn copying_model_passes() {
    let spec = SequenceSpec::new(SeqMode::FramesOnly, 5, 1, 1);
    let states = game_states(6, 2);
    let corpus: Vec<Vec<u32>> = states
        .iter()
        .map(|s| build_sequence(&[tokenize_state(s), tokenize_state(s)], &[], &spec).unwrap().ids)
        .collect();
    let ngram = NGram::fit(&corpus, 40, spec.vocab(), 1e-3).unwrap();
    let mut agent = SeqAgent::new("copy", Arc::new(ArModel::NGram(ngram)), spec, None, Policy::Greedy).unwrap();
    let d = agent.decide(&states[..4]).unwrap();
    assert_eq!(d.mv, Move::Pass);
    assert!(d.raw_legal);
}

#[test]
fn raw_legality_accounting() {
    let spec = SequenceSpec::new(SeqMode::CodesAndFrames, 5, 2, 27);
    let model = perturbed(small_config(spec.vocab()), 8);
    let mut agent = SeqAgent::new(
        "noise",
        Arc::new(ArModel::Transformer(model)),
        spec,
        None,
        Policy::Temperature { tau: 1.0, seed: 0 },
    )
    .unwrap();
    agent.reset(4);
    let mut opponent = RandomAgent::new("r");
    opponent.reset(4);
    let mut history = vec![new_game(5, 7.0).unwrap()];
    let mut raw = 0;
    for i in 0..30 {
        let d = if i % 2 == 0 {
            let d = agent.decide(&history).unwrap();
            raw += d.raw_legal as u64;
            d
        } else {
            opponent.decide(&history).unwrap()
        };
        assert!(history.last().unwrap().is_legal(d.mv).is_legal());
        let next = history.last().unwrap().play(d.mv).unwrap();
        history.push(next);
        if history.last().unwrap().is_over() {
            break;
        }
    }
    let s = agent.stats;
    assert_eq!(s.raw_legal + s.fallbacks, s.requested);
    assert_eq!(s.raw_legal, raw);
}

#[test]
fn codes_only_agent_reads_moves_through_the_code_idm() {
    let spec = SequenceSpec::new(SeqMode::CodesOnly, 5, 2, 27);
    let model = || Arc::new(ArModel::Transformer(perturbed(small_config(spec.vocab()), 9)));
    assert!(SeqAgent::new("x", model(), spec.clone(), None, Policy::Greedy).is_err());
    let wrong = CodeIdm::new(5, 1, 27, &CodeIdmConfig::default());
    assert!(SeqAgent::new("x", model(), spec.clone(), Some(Arc::new(wrong)), Policy::Greedy).is_err());
    let idm = Arc::new(CodeIdm::new(5, 2, 27, &CodeIdmConfig::default()));
    let mut agent = SeqAgent::new("c", model(), spec.clone(), Some(idm.clone()), Policy::Greedy).unwrap();
    let history = game_states(4, 3);
    agent.reset(0);
    let d = agent.decide(&history).unwrap();
    assert!(history.last().unwrap().is_legal(d.mv).is_legal());
    // The raw proposal is the classifier's reading of the generated codes.
    let tokens = generate(
        &mut TfPredictor::new(match model().as_ref() {
            ArModel::Transformer(t) => t,
            _ => unreachable!(),
        }),
        &spec.prompt(&tokenize_state(history.last().unwrap())).unwrap(),
        &spec,
        Policy::Greedy,
        &InterventionSpec::none(),
    )
    .unwrap();
    let codes: Vec<usize> = tokens.iter().map(|&t| (t - spec.frame_vocab) as usize).collect();
    let raw = idm.predict(history.last().unwrap(), &codes).unwrap();
    assert_eq!(d.raw_legal, history.last().unwrap().is_legal(raw).is_legal());
    if d.raw_legal {
        assert_eq!(d.mv, raw);
    }
}

#[test]
fn code_idm_learns_a_planted_code_to_move_map() {
    // Code 1 names the point directly; code 2 is noise the classifier must ignore.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let states = game_states(10, 4);
    let examples: Vec<IdmExample> = (0..400)
        .map(|_| {
            let state = states[rng.gen_range(0..states.len())].clone();
            let legal: Vec<Move> = (0..25).map(|i| Move::from_index(i, 5)).filter(|&m| state.is_legal(m).is_legal()).collect();
            let mv = legal[rng.gen_range(0..legal.len())];
            let codes = vec![mv.index(5).unwrap(), rng.gen_range(0..27)];
            IdmExample { state, codes, mv }
        })
        .collect();
    let config = CodeIdmConfig {
        steps: 600,
        ..CodeIdmConfig::default()
    };
    let mut idm = CodeIdm::new(5, 2, 27, &config);
    let losses = idm.train(&examples, &config).unwrap();
    assert!(losses.last().unwrap() < &0.1, "{:?}", losses.last());
    let hits = examples.iter().filter(|e| idm.predict(&e.state, &e.codes).unwrap() == e.mv).count();
    assert_eq!(hits, examples.len());
    let again = CodeIdm::new(5, 2, 27, &config).train(&examples, &config).unwrap();
    assert_eq!(again, losses);
}

#[test]
fn training_reduces_loss_and_is_deterministic() {
    let spec = SequenceSpec::new(SeqMode::FramesOnly, 5, 1, 1);
    let corpus: Vec<TokenSequence> = (0..4)
        .flat_map(|g| {
            let states = game_states(10, g);
            let spec = spec.clone();
            states
                .windows(2)
                .map(move |w| build_sequence(&[tokenize_state(&w[0]), tokenize_state(&w[1])], &[], &spec).unwrap())
                .collect::<Vec<_>>()
        })
        .collect();
    let cfg = ArTrainConfig {
        model: TransformerConfig {
            vocab: spec.vocab(),
            ..small_config(spec.vocab())
        },
        adam: AdamConfig {
            lr: 3e-3,
            warmup: 10,
            max_steps: 60,
            ..AdamConfig::ar()
        },
        batch_size: 4,
        steps: 60,
        log_every: 20,
        seed: 1,
    };
    let (model, losses) = train_ar(&corpus, &cfg, |_, _, _| {}).unwrap();
    let (_, again) = train_ar(&corpus, &cfg, |_, _, _| {}).unwrap();
    assert_eq!(losses, again);
    assert!((losses[0] - (spec.vocab() as f64).ln()).abs() < 1e-9);
    let tail: f64 = losses[50..].iter().sum::<f64>() / 10.0;
    assert!(tail < losses[0] * 0.5, "{} -> {tail}", losses[0]);

    let mut buf = Vec::new();
    model.save(&mut buf, serde_json::json!({ "mode": spec.mode })).unwrap();
    let (back, meta) = TinyTransformer::load(&mut buf.as_slice()).unwrap();
    assert_eq!(meta["mode"], "frames_only");
    assert_eq!(back.store.flatten(), model.store.flatten());
}

#[test]
fn corpus_round_trip() {
    let spec = SequenceSpec::new(SeqMode::CodesAndFrames, 5, 2, 27);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let seqs: Vec<_> = (0..5)
        .map(|_| {
            let grids: Vec<_> = (0..3).map(|_| random_grid(&mut rng, 5)).collect();
            let codes = vec![vec![rng.gen_range(0..27), 4]; 2];
            build_sequence(&grids, &codes, &spec).unwrap()
        })
        .collect();
    let mut buf = Vec::new();
    let meta = write_corpus(&mut buf, &seqs, &spec).unwrap();
    assert_eq!(meta.sequences, 5);
    assert_eq!(meta.tokens, 5 * spec.sequence_len(3));
    assert_eq!(read_corpus(&mut buf.as_slice()).unwrap(), seqs);
    buf.pop();
    assert!(read_corpus(&mut buf.as_slice()).is_err());
}
