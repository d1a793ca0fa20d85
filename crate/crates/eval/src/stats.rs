use std::collections::{BTreeMap, HashSet};

use gobench_core::go::GameRecord;
use gobench_core::GoError;
use serde::{Deserialize, Serialize};

/// Counts bucketed by move number; bucket 0 is the empty board.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub states_by_move: BTreeMap<usize, usize>,
    pub unique_by_move: BTreeMap<usize, usize>,
    /// Present only when a reference set was supplied.
    pub repetition_by_move: Option<BTreeMap<usize, f64>>,
    pub total_states: usize,
    pub total_unique: usize,
    pub games: usize,
}

/// Hashes of every position in `records`.
pub fn reference_hashes(records: &[GameRecord]) -> Result<HashSet<u64>, GoError> {
    let mut set = HashSet::new();
    for r in records {
        set.extend(r.replay()?.iter().map(|s| s.hash()));
    }
    Ok(set)
}

pub fn dataset_stats(records: &[GameRecord], reference: Option<&HashSet<u64>>) -> Result<DatasetStats, GoError> {
    let mut seen: BTreeMap<usize, HashSet<u64>> = BTreeMap::new();
    let mut all = HashSet::new();
    let mut states_by_move: BTreeMap<usize, usize> = BTreeMap::new();
    let mut hits: BTreeMap<usize, usize> = BTreeMap::new();
    for r in records {
        for (i, s) in r.replay()?.iter().enumerate() {
            let h = s.hash();
            seen.entry(i).or_default().insert(h);
            all.insert(h);
            *states_by_move.entry(i).or_default() += 1;
            if reference.is_some_and(|set| set.contains(&h)) {
                *hits.entry(i).or_default() += 1;
            }
        }
    }
    let repetition_by_move = reference.map(|_| {
        states_by_move
            .iter()
            .map(|(&i, &n)| (i, hits.get(&i).copied().unwrap_or(0) as f64 / n as f64))
            .collect()
    });
    Ok(DatasetStats {
        total_states: states_by_move.values().sum(),
        unique_by_move: seen.into_iter().map(|(i, s)| (i, s.len())).collect(),
        states_by_move,
        repetition_by_move,
        total_unique: all.len(),
        games: records.len(),
    })
}
