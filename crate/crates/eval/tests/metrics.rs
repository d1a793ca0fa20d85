use std::collections::BTreeMap;

use gobench_core::agent::{Agent, AgentError, Decision, GreedyCaptureTeacher, OccupiedAgent, RandomAgent};
use gobench_core::go::{new_game, AnnotatedMove, BoardState, Move};
use gobench_eval::{action_accuracy, action_value_ratio, agent_value_ratio, legal_rate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_states(n: usize, seed: u64) -> Vec<BoardState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < n {
        let mut s = new_game(5, 7.0).unwrap();
        for _ in 0..rng.gen_range(1..12) {
            let mv = gobench_core::agent::random_legal_move(&s, &mut rng);
            s = s.play(mv).unwrap();
        }
        if s.stone_count() > 0 && !s.is_over() {
            out.push(s);
        }
    }
    out
}

/// Replays a fixed list of decisions.
struct Script(Vec<Decision>);
impl Agent for Script {
    fn name(&self) -> String {
        "script".into()
    }
    fn decide(&mut self, _: &[BoardState]) -> Result<Decision, AgentError> {
        Ok(self.0.remove(0))
    }
}

fn annotate(states: &[BoardState]) -> Vec<(BoardState, AnnotatedMove)> {
    states
        .iter()
        .map(|s| {
            let best = GreedyCaptureTeacher::best_move(s);
            let mut values: BTreeMap<Move, f64> = s.legal_moves().unwrap().into_iter().map(|m| (m, 0.3)).collect();
            values.insert(Move::Pass, 0.1);
            values.insert(best, 0.6);
            (s.clone(), AnnotatedMove::new(best, best, values).unwrap())
        })
        .collect()
}

#[test]
fn legal_rate_fixtures() {
    let states = random_states(10, 1);
    assert_eq!(legal_rate(&mut RandomAgent::new("r"), &states).unwrap().percent(), 100.0);
    assert_eq!(legal_rate(&mut OccupiedAgent, &states).unwrap().percent(), 0.0);
    let mut decisions: Vec<Decision> = states.iter().map(|s| Decision::legal(GreedyCaptureTeacher::best_move(s))).collect();
    decisions[4].raw_legal = false;
    let c = legal_rate(&mut Script(decisions), &states).unwrap();
    assert_eq!((c.hits, c.total, c.percent()), (9, 10, 90.0));
    assert!(legal_rate(&mut OccupiedAgent, &[]).is_err());
}

#[test]
fn accuracy_fixtures() {
    let annotated = annotate(&random_states(4, 2));
    let mut oracle: Vec<Decision> = annotated.iter().map(|(_, a)| Decision::legal(a.best)).collect();
    assert_eq!(action_accuracy(&mut Script(oracle.clone()), &annotated).unwrap().percent(), 100.0);
    oracle[2].mv = Move::Pass;
    assert_eq!(action_accuracy(&mut Script(oracle), &annotated).unwrap().percent(), 75.0);
    let passes = vec![Decision::legal(Move::Pass); 4];
    assert_eq!(action_accuracy(&mut Script(passes), &annotated).unwrap().percent(), 0.0);
}

#[test]
fn value_ratio_fixtures() {
    let annotated = annotate(&random_states(20, 3));
    let oracle: Vec<Decision> = annotated.iter().map(|(_, a)| Decision::legal(a.best)).collect();
    assert_eq!(agent_value_ratio(&mut Script(oracle), &annotated).unwrap().percent, 100.0);
    let a = &annotated[0].1;
    let half: BTreeMap<Move, f64> = [(a.best, 0.8), (Move::Pass, 0.4)].into_iter().collect();
    let b = AnnotatedMove::new(a.best, a.best, half).unwrap();
    let r = action_value_ratio(&[(a.best, b.clone()), (Move::Pass, b)]).unwrap();
    assert_eq!(r.percent, 75.0);
}
