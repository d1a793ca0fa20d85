use std::path::PathBuf;
use std::time::Duration;

use gobench_core::go::{Color, GameRecord, Move, Source};
use gobench_core::gtp::{GtpError, GtpSession, ScriptedEngine, TranscriptEntry};
use gobench_core::sgf::{self, from_record, parse, serialize, to_record, SgfCollection};
use proptest::prelude::*;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/corpus9")
}

#[test]
fn sgf_corpus_round_trip_is_fixed_point() {
    let mut files: Vec<_> = std::fs::read_dir(corpus_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert_eq!(files.len(), 100);
    for f in files {
        let text = std::fs::read_to_string(&f).unwrap();
        let parsed = parse(&text).unwrap();
        let again = parse(&serialize(&parsed)).unwrap();
        assert_eq!(parsed, again, "{}", f.display());
        let record = to_record(&parsed.trees[0], 7.0).unwrap();
        record.replay().unwrap();
        let back = to_record(&from_record(&record), 7.0).unwrap();
        assert_eq!(back.moves, record.moves);
    }
}

#[test]
fn empty_collection_serializes_to_empty_string() {
    assert_eq!(serialize(&SgfCollection::default()), "");
}

fn session(engine: ScriptedEngine) -> Result<GtpSession, GtpError> {
    GtpSession::with_transport(Box::new(engine), Duration::from_secs(1))
}

#[test]
fn transcript_request_log_is_byte_exact() {
    let engine = ScriptedEngine::transcript(vec![
        TranscriptEntry::ok("clear_board", ""),
        TranscriptEntry::ok("boardsize 9", ""),
        TranscriptEntry::ok("komi 7", ""),
        TranscriptEntry::ok("play B E5", ""),
        TranscriptEntry::ok("play W C3", ""),
        TranscriptEntry::ok("genmove B", "G7"),
    ]);
    let mut s = session(engine).unwrap();
    s.setup_moves(9, 7.0, &[Move::place(4, 4), Move::place(2, 6)]).unwrap();
    assert_eq!(s.genmove(Color::Black, 9).unwrap(), Move::place(6, 2));
    let expected = "1 protocol_version\n2 name\n3 version\n4 clear_board\n5 boardsize 9\n6 komi 7\n\
                    7 play B E5\n8 play W C3\n9 genmove B\n";
    assert_eq!(String::from_utf8(s.request_log().to_vec()).unwrap(), expected);
}

#[test]
fn handshake_and_basic_replies() {
    let mut s = session(ScriptedEngine::rules()).unwrap();
    assert_eq!(s.protocol_version, "2");
    assert_eq!(s.send("boardsize", &["9"]).unwrap(), "");
    assert_eq!(s.send("frobnicate", &[]), Err(GtpError::Engine("unknown command".into())));
}

#[test]
fn setup_command_counts() {
    let mut s = session(ScriptedEngine::rules()).unwrap();
    s.setup_moves(9, 7.0, &[]).unwrap();
    let log = String::from_utf8(s.request_log().to_vec()).unwrap();
    assert_eq!(log.lines().count(), 3 + 3);
    let rec = GameRecord::new(
        9,
        7.0,
        Source::Synthetic,
        vec![Move::place(0, 0), Move::place(1, 1), Move::place(2, 2), Move::place(3, 3), Move::place(4, 4)],
    );
    let mut s = session(ScriptedEngine::rules()).unwrap();
    s.setup_position(&rec).unwrap();
    let log = String::from_utf8(s.request_log().to_vec()).unwrap();
    let cmds: Vec<&str> = log.lines().skip(3).collect();
    assert_eq!(cmds.len(), 8);
    let colors: Vec<&str> = cmds[3..].iter().map(|l| l.split(' ').nth(2).unwrap()).collect();
    assert_eq!(colors, ["B", "W", "B", "W", "B"]);
}

#[test]
fn genmove_replies() {
    for (reply, mv) in [("E5", Move::place(4, 4)), ("pass", Move::Pass), ("resign", Move::Resign)] {
        let engine = ScriptedEngine::transcript(vec![TranscriptEntry::ok("genmove W", reply)]);
        let mut s = session(engine).unwrap();
        assert_eq!(s.genmove(Color::White, 9).unwrap(), mv);
    }
}

#[test]
fn analysis_fixture_values() {
    let reply = "info move E5 visits 120 winrate 0.61 scoreLead 2.4 order 0 pv E5 D4 \
                 info move D4 visits 40 winrate 0.55 scoreLead 1.1 order 1 pv D4 E5 \
                 info move F6 visits 20 winrate 0.52 scoreLead 0.6 order 2 pv F6 \
                 info move C3 visits 12 winrate 0.47 scoreLead -0.4 order 3 pv C3 \
                 info move pass visits 8 winrate 0.12 scoreLead -9.5 order 4";
    let engine = ScriptedEngine::transcript(vec![TranscriptEntry::ok("kata-analyze 200", reply)]);
    let mut s = session(engine).unwrap();
    let lines = s.analyze(200, 9).unwrap();
    let got: Vec<(Move, u64, f64, f64, u32)> =
        lines.iter().map(|l| (l.mv, l.visits, l.winrate, l.score_lead, l.order)).collect();
    assert_eq!(
        got,
        vec![
            (Move::place(4, 4), 120, 0.61, 2.4, 0),
            (Move::place(3, 5), 40, 0.55, 1.1, 1),
            (Move::place(5, 3), 20, 0.52, 0.6, 2),
            (Move::place(2, 6), 12, 0.47, -0.4, 3),
            (Move::Pass, 8, 0.12, -9.5, 4),
        ]
    );
}

#[test]
fn framing_failures() {
    let mut e = ScriptedEngine::rules();
    e.garbage_prefix = Some("Welcome to engine!".into());
    match session(e) {
        Err(GtpError::Handshake { captured }) => assert!(captured.contains("Welcome")),
        other => panic!("{other:?}"),
    }
    let mut e = ScriptedEngine::rules();
    e.silent = true;
    assert!(matches!(session(e), Err(GtpError::HandshakeTimeout)));
    let mut e = ScriptedEngine::rules();
    e.id_skew = 1;
    assert!(matches!(session(e), Err(GtpError::Handshake { .. })));
    let mut e = ScriptedEngine::rules();
    e.drop_terminator = true;
    assert!(matches!(session(e), Err(GtpError::Handshake { .. })));
}

#[test]
fn unreachable_tcp_is_connect_error() {
    let spec = gobench_core::gtp::TransportSpec::Tcp {
        address: "127.0.0.1:1".into(),
    };
    assert!(matches!(GtpSession::open(&spec, Duration::from_millis(200)), Err(GtpError::Connect(_))));
}

#[test]
fn rules_engine_genmove_is_legal_after_setup() {
    let rec = sgf::records_from_text(&std::fs::read_to_string(corpus_dir().join("game_005.sgf")).unwrap())
        .unwrap()
        .remove(0);
    let states = rec.replay().unwrap();
    for k in [0, 5, 17, 30] {
        let mut s = session(ScriptedEngine::rules()).unwrap();
        s.setup_moves(9, 7.0, &rec.moves[..k]).unwrap();
        let mv = s.genmove(states[k].to_move(), 9).unwrap();
        assert!(states[k].is_legal(mv).is_legal());
    }
}

proptest! {
    #[test]
    fn sgf_generated_trees_round_trip(values in proptest::collection::vec("[ -~]{0,12}", 1..6), moves in proptest::collection::vec(0u8..81, 0..20)) {
        let mut text = String::from("(;GM[1]SZ[9]");
        for (i, v) in values.iter().enumerate() {
            let escaped = v.replace('\\', "\\\\").replace(']', "\\]");
            text.push_str(&format!("C{}[{escaped}]", ["", "A", "B"][i % 3]));
        }
        for (i, m) in moves.iter().enumerate() {
            let c = if i % 2 == 0 { 'B' } else { 'W' };
            text.push_str(&format!(";{c}[{}{}]", (b'a' + m % 9) as char, (b'a' + m / 9) as char));
        }
        text.push(')');
        let parsed = parse(&text).unwrap();
        prop_assert_eq!(parse(&serialize(&parsed)).unwrap(), parsed);
    }
}
