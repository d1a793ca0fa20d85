use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use gobench_cli::annotate::{annotate, Mark};
use gobench_cli::curate::{curate, CurationConfig};
use gobench_cli::shards::{build_shards, load_shards, window_count, ShardConfig};
use gobench_cli::store::{ingest, read_store, store_hash, write_store, IngestFilter};
use gobench_core::go::{BoardState, Cell, GameRecord, Move, Source};
use gobench_core::gtp::{GtpSession, ScriptedEngine, TransportSpec};
use gobench_ldm::input::clip_frames;
use gobench_seq::{SeqMode, SequenceSpec};
use proptest::prelude::*;

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/corpus9")
}

fn bundled(n: usize) -> Vec<GameRecord> {
    let mut records = ingest(&[corpus()], &IngestFilter::default()).unwrap().records;
    records.truncate(n);
    records
}

fn fake_session() -> GtpSession {
    GtpSession::with_transport(Box::new(ScriptedEngine::rules()), Duration::from_secs(5)).unwrap()
}

#[test]
fn ingest_skips_bad_input_and_filters_by_size() {
    let dir = tempfile::tempdir().unwrap();
    let good = fs::read_to_string(corpus().join("game_000.sgf")).unwrap();
    fs::write(dir.path().join("a.sgf"), &good).unwrap();
    fs::write(dir.path().join("b.sgf"), "(;GM[1]SZ[9];B[ee").unwrap();
    // An illegal replay (same point twice) is rejected even though it parses.
    fs::write(dir.path().join("c.sgf"), "(;GM[1]SZ[9];B[ee];W[ee])").unwrap();
    let small = GameRecord::new(5, 7.0, Source::Synthetic, vec![Move::place(2, 2), Move::Pass]);
    let line = serde_json::to_string(&small).unwrap();
    fs::write(dir.path().join("d.jsonl"), format!("{line}\nnot json\n\n{line}\n")).unwrap();
    fs::write(dir.path().join("notes.txt"), "ignored").unwrap();

    let all = ingest(&[dir.path().to_path_buf()], &IngestFilter::default()).unwrap();
    assert_eq!(all.records.len(), 3);
    assert_eq!(all.errors.len(), 3, "{:?}", all.errors);
    assert!(all.errors.iter().any(|e| e.contains("d.jsonl:2")));

    let nine = ingest(
        &[dir.path().to_path_buf()],
        &IngestFilter {
            size: Some(9),
            source: Some(Source::Human),
        },
    )
    .unwrap();
    assert_eq!(nine.records.len(), 1);
    assert_eq!(nine.filtered, 2);
    assert_eq!(nine.records[0].source, Source::Human);

    assert!(ingest(&[dir.path().join("b.sgf")], &IngestFilter::default()).is_err());
}

#[test]
fn store_round_trip_is_hash_stable() {
    let dir = tempfile::tempdir().unwrap();
    let first = ingest(&[corpus()], &IngestFilter::default()).unwrap().records;
    assert_eq!(first.len(), 100);
    let again = ingest(&[corpus()], &IngestFilter::default()).unwrap().records;
    assert_eq!(store_hash(&first).unwrap(), store_hash(&again).unwrap());
    let path = dir.path().join("store.jsonl");
    write_store(&path, &first).unwrap();
    let back = read_store(&path).unwrap();
    assert_eq!(back, first);
    // Re-ingesting the written store yields the same records.
    let reread = ingest(&[path], &IngestFilter::default()).unwrap().records;
    assert_eq!(store_hash(&reread).unwrap(), store_hash(&first).unwrap());
}

/// The rules-mode fake engine ranks legal placements by distance to the centre.
fn central_move(s: &BoardState) -> Move {
    let n = s.size() as i64;
    s.legal_moves()
        .unwrap()
        .into_iter()
        .filter(|m| m.is_place())
        .min_by_key(|m| match *m {
            Move::Place { col, row } => {
                let (dc, dr) = (2 * col as i64 - (n - 1), 2 * row as i64 - (n - 1));
                (dc * dc + dr * dr, row as i64 * n + col as i64)
            }
            _ => unreachable!(),
        })
        .unwrap_or(Move::Pass)
}

#[test]
fn annotation_through_the_fake_engine_binary() {
    let mut records = bundled(3);
    let command = format!("{} fake-engine", env!("CARGO_BIN_EXE_gobench"));
    let mut sessions: Vec<GtpSession> = (0..2)
        .map(|_| GtpSession::open(&TransportSpec::process(&command), Duration::from_secs(30)).unwrap())
        .collect();
    let report = annotate(&mut records, &mut sessions, 50, None).unwrap();
    assert_eq!(report.annotated, 3);
    assert!(report.failed.is_empty());
    for r in &records {
        let ann = r.annotations.as_ref().unwrap();
        assert_eq!(ann.len(), r.moves.len());
        for (s, a) in r.replay().unwrap().iter().zip(ann) {
            assert_eq!(a.best, central_move(s));
            assert_eq!(a.action_values[&a.best], 0.6);
        }
    }
    for s in sessions {
        s.quit().unwrap();
    }
}

#[test]
fn annotation_resumes_from_marks_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let marks = dir.path().join("marks");
    let reference = {
        let mut r = bundled(4);
        annotate(&mut r, &mut [fake_session()], 10, None).unwrap();
        r
    };

    // Game 1 was finished by an earlier run; a torn line follows it.
    let mark = Mark {
        game: 1,
        annotations: reference[1].annotations.clone().unwrap(),
    };
    fs::write(&marks, format!("{}\n{{\"game\":2,\"annot", serde_json::to_string(&mark).unwrap())).unwrap();
    let mut records = bundled(4);
    let report = annotate(&mut records, &mut [fake_session()], 10, Some(&marks)).unwrap();
    assert_eq!(report.resumed, 1);
    assert_eq!(report.annotated, 3);
    assert_eq!(records, reference);

    // Everything is now marked: a third run does no work.
    let mut records = bundled(4);
    let report = annotate(&mut records, &mut [fake_session()], 10, Some(&marks)).unwrap();
    assert_eq!((report.resumed, report.annotated), (4, 0));
    assert_eq!(records, reference);

    // An engine that knows no analysis command fails every game.
    let mut records = bundled(2);
    let mut broken = fake_session();
    broken.set_analysis_command("lz-analyze");
    let report = annotate(&mut records, &mut [broken], 10, None).unwrap();
    assert_eq!(report.failed, vec![0, 1]);
    assert!(records.iter().all(|r| r.annotations.is_none()));
}

/// Brute-force curation: canonical positions compared cell by cell.
fn curate_oracle(records: &[GameRecord], min_stones: usize) -> Vec<(usize, usize)> {
    let mut seen: HashSet<Vec<Cell>> = HashSet::new();
    let mut out = Vec::new();
    for (g, r) in records.iter().enumerate() {
        let Some(ann) = &r.annotations else { continue };
        let mut s = BoardState::new(r.size, r.komi).unwrap();
        for (ply, &mv) in r.moves.iter().enumerate().take(ann.len()) {
            let stones = s.cells().iter().filter(|c| **c != Cell::Empty).count();
            if stones >= min_stones && !s.is_over() && seen.insert(s.cells().to_vec()) {
                out.push((g, ply));
            }
            s.apply(mv).unwrap();
        }
    }
    out
}

#[test]
fn curation_matches_brute_force() {
    let mut records = bundled(12);
    annotate(&mut records, &mut [fake_session()], 10, None).unwrap();
    // Games 3 and 7 unannotated; game 5 duplicated so every position repeats.
    records[3].annotations = None;
    records[7].annotations = None;
    records.push(records[5].clone());
    for min_stones in [0, 10, 30] {
        let cfg = CurationConfig {
            min_stones,
            ..CurationConfig::default()
        };
        let got: Vec<(usize, usize)> = curate(&records, &cfg, 0).unwrap().iter().map(|t| (t.game, t.ply)).collect();
        assert_eq!(got, curate_oracle(&records, min_stones), "min_stones {min_stones}");
    }

    let all = curate(&records, &CurationConfig::default(), 0).unwrap();
    for t in all.iter().take(50) {
        let s = t.state().unwrap();
        assert_eq!(s.hash(), t.hash);
        assert_eq!(t.annotation, records[t.game].annotations.as_ref().unwrap()[t.ply]);
    }
    let cfg = CurationConfig {
        target: Some(40),
        ..CurationConfig::default()
    };
    let a = curate(&records, &cfg, 9).unwrap();
    assert_eq!(a.len(), 40);
    assert_eq!(a, curate(&records, &cfg, 9).unwrap());
    assert_ne!(a, curate(&records, &cfg, 10).unwrap());
    assert!(a.windows(2).all(|w| (w[0].game, w[0].ply) < (w[1].game, w[1].ply)));
    let too_many = CurationConfig {
        target: Some(all.len() + 1),
        ..CurationConfig::default()
    };
    assert!(curate(&records, &too_many, 0).is_err());
}

proptest! {
    #[test]
    fn window_count_matches_clipping(states in 1usize..200, clip_len in 2usize..12) {
        let frames: Vec<usize> = (0..states).collect();
        let clips = clip_frames(&frames, clip_len);
        prop_assert_eq!(clips.len(), window_count(states, clip_len));
        prop_assert!(clips.iter().all(|c| c.len() == clip_len));
    }
}

fn dir_digest(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn shards_do_not_depend_on_worker_count() {
    let records = bundled(30);
    let spec = SequenceSpec::new(SeqMode::FramesOnly, 9, 5, 0);
    let cfg = ShardConfig {
        clip_len: 6,
        records_per_shard: 50,
    };
    let dir = tempfile::tempdir().unwrap();
    let one = build_shards(&records, None, &spec, &cfg, 1, &dir.path().join("one")).unwrap();
    let three = build_shards(&records, None, &spec, &cfg, 3, &dir.path().join("three")).unwrap();
    assert_eq!(one, three);
    assert_eq!(dir_digest(&dir.path().join("one")), dir_digest(&dir.path().join("three")));

    let expected: usize = records.iter().map(|r| window_count(r.moves.len() + 1, 6)).sum();
    assert_eq!(one.windows, expected);
    assert_eq!(one.shards.len(), expected.div_ceil(50));
    let (manifest, windows) = load_shards(&dir.path().join("one")).unwrap();
    assert_eq!(manifest, one);
    assert_eq!(windows.len(), expected);

    // Tampering is detected.
    let shard = dir.path().join("one").join(&one.shards[0].file);
    let mut bytes = fs::read(&shard).unwrap();
    bytes[10] ^= 1;
    fs::write(&shard, bytes).unwrap();
    assert!(load_shards(&dir.path().join("one")).is_err());

    let codes = SequenceSpec::new(SeqMode::CodesOnly, 9, 5, 125);
    assert!(build_shards(&records, None, &codes, &cfg, 1, &dir.path().join("codes")).is_err());
}
