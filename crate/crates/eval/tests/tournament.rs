use gobench_core::agent::{Agent, AgentError, Decision, RandomAgent};
use gobench_core::go::{BoardState, EndReason, GameRecord, Move, Winner};
use gobench_eval::{play_game, run_tournament, EvalError, MatchResult, TournamentConfig};

fn randoms(n: usize) -> Vec<Box<dyn Agent>> {
    (0..n).map(|i| Box::new(RandomAgent::new(&format!("r{i}"))) as Box<dyn Agent>).collect()
}

fn small(games: usize, seed: u64) -> TournamentConfig {
    TournamentConfig {
        games_per_pair: games,
        seed,
        move_cap: 60,
        board_size: 5,
        ..TournamentConfig::default()
    }
}

fn check_replay(r: &MatchResult, size: usize, komi: f64) {
    let rec = GameRecord::new(size, komi, Default::default(), r.moves.clone());
    let states = rec.replay().unwrap();
    let hashes: Vec<u64> = states[1..].iter().map(|s| s.hash()).collect();
    assert_eq!(hashes, r.hashes);
    let last = states.last().unwrap();
    match r.result.end_reason {
        EndReason::TwoPasses | EndReason::MoveCap => assert_eq!(r.result, last.score(komi)),
        _ => assert!(r.result.margin.is_none()),
    }
}

#[test]
fn colours_split_evenly_with_odd_remainder_to_first_name() {
    let mut agents = randoms(3);
    agents.reverse();
    let res = run_tournament(&mut agents, &small(5, 1)).unwrap();
    assert_eq!(res.len(), 15);
    for (a, b) in [("r0", "r1"), ("r0", "r2"), ("r1", "r2")] {
        let black_a = res.iter().filter(|r| r.black == a && r.white == b).count();
        let black_b = res.iter().filter(|r| r.black == b && r.white == a).count();
        assert_eq!((black_a, black_b), (3, 2));
    }
    let even = run_tournament(&mut randoms(2), &small(10, 1)).unwrap();
    assert_eq!(even.iter().filter(|r| r.black == "r0").count(), 5);
}

#[test]
fn results_replay_and_are_deterministic() {
    let a = run_tournament(&mut randoms(3), &small(6, 42)).unwrap();
    let b = run_tournament(&mut randoms(3), &small(6, 42)).unwrap();
    let c = run_tournament(&mut randoms(3), &small(6, 43)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    for r in &a {
        check_replay(r, 5, 7.0);
        assert!(r.moves.len() <= 60);
        assert!(r.raw_legal.iter().all(|&x| x));
    }
    let seeds: std::collections::HashSet<u64> = a.iter().map(|r| r.seed).collect();
    assert_eq!(seeds.len(), a.len());
}

#[test]
fn json_lines_round_trip() {
    let res = run_tournament(&mut randoms(2), &small(2, 3)).unwrap();
    for r in &res {
        let line = serde_json::to_string(r).unwrap();
        assert!(!line.contains('\n'));
        assert_eq!(&serde_json::from_str::<MatchResult>(&line).unwrap(), r);
    }
}

struct Failing;
impl Agent for Failing {
    fn name(&self) -> String {
        "failing".into()
    }
    fn decide(&mut self, _: &[BoardState]) -> Result<Decision, AgentError> {
        Err(AgentError::Other("boom".into()))
    }
}

struct Stubborn;
impl Agent for Stubborn {
    fn name(&self) -> String {
        "stubborn".into()
    }
    fn decide(&mut self, _: &[BoardState]) -> Result<Decision, AgentError> {
        Ok(Decision::legal(Move::place(0, 0)))
    }
}

struct Passer;
impl Agent for Passer {
    fn name(&self) -> String {
        "passer".into()
    }
    fn decide(&mut self, _: &[BoardState]) -> Result<Decision, AgentError> {
        Ok(Decision::legal(Move::Pass))
    }
}

#[test]
fn failures_are_adjudicated() {
    let r = play_game(&mut Failing, &mut Passer, 5, 7.0, 50, 0).unwrap();
    assert_eq!((r.result.winner, r.result.end_reason), (Winner::White, EndReason::Forfeit));
    let r = play_game(&mut Stubborn, &mut Stubborn, 5, 7.0, 50, 0).unwrap();
    assert_eq!((r.result.winner, r.result.end_reason), (Winner::Black, EndReason::IllegalMove));
    assert_eq!(r.moves, vec![Move::place(0, 0)]);
    let r = play_game(&mut Passer, &mut Passer, 5, 7.0, 50, 0).unwrap();
    assert_eq!((r.result.winner, r.result.end_reason), (Winner::White, EndReason::TwoPasses));
    let r = play_game(&mut Passer, &mut Passer, 5, 7.0, 1, 0).unwrap();
    assert_eq!(r.result.end_reason, EndReason::MoveCap);
}

#[test]
fn needs_two_agents() {
    assert!(matches!(
        run_tournament(&mut randoms(1), &small(2, 0)),
        Err(EvalError::TooFewAgents(1))
    ));
}
