//! Engine re-annotation of stored games.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use anyhow::{anyhow, Context, Result};
use gobench_core::go::{AnnotatedMove, Color, GameRecord, Move};
use gobench_core::gtp::{vertex, GtpSession};
use log::{info, warn};
use serde::{Deserialize, Serialize};

/// Completion mark: one line per finished game in the marks file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mark {
    pub game: usize,
    pub annotations: Vec<AnnotatedMove>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnnotateReport {
    pub annotated: usize,
    /// Games already complete on entry (annotated in the store or marked).
    pub resumed: usize,
    pub failed: Vec<usize>,
}

/// Analyses every position of one game, stepping through it with `play`.
pub fn annotate_game(session: &mut GtpSession, record: &GameRecord, visits: u32) -> Result<Vec<AnnotatedMove>> {
    session.setup_moves(record.size, record.komi, &[])?;
    let mut color = Color::Black;
    let mut out = Vec::with_capacity(record.moves.len());
    for &played in &record.moves {
        let lines = session.analyze(visits, record.size)?;
        let best = lines.first().ok_or_else(|| anyhow!("empty analysis"))?.mv;
        let mut values = BTreeMap::new();
        for l in &lines {
            values.entry(l.mv).or_insert(l.winrate);
        }
        out.push(AnnotatedMove::new(played, best, values)?);
        if played == Move::Resign {
            break;
        }
        session.send("play", &[&color.letter().to_string(), &vertex(played, record.size)])?;
        color = color.opponent();
    }
    Ok(out)
}

fn read_marks(path: &Path) -> Result<Vec<Mark>> {
    if !path.exists() {
        return Ok(vec![]);
    }
    let mut marks = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        match serde_json::from_str(&line) {
            Ok(m) => marks.push(m),
            // A torn final line from an interrupted run is simply redone.
            Err(e) => warn!("{}:{}: ignoring mark: {e}", path.display(), i + 1),
        }
    }
    Ok(marks)
}

/// Annotates every game that is not yet complete. Game `i` goes to session
/// `i % sessions.len()`; finished games are appended to `marks` as they
/// complete so an interrupted run can resume. Engine failures leave the game
/// unannotated and are reported.
pub fn annotate(
    records: &mut [GameRecord],
    sessions: &mut [GtpSession],
    visits: u32,
    marks: Option<&Path>,
) -> Result<AnnotateReport> {
    if sessions.is_empty() {
        return Err(anyhow!("no engine sessions"));
    }
    let mut report = AnnotateReport::default();
    if let Some(path) = marks {
        for m in read_marks(path)? {
            if let Some(r) = records.get_mut(m.game) {
                if r.annotations.is_none() && m.annotations.len() == r.moves.len() {
                    r.annotations = Some(m.annotations);
                }
            }
        }
    }
    let todo: Vec<usize> = (0..records.len()).filter(|&i| records[i].annotations.is_none()).collect();
    report.resumed = records.len() - todo.len();
    let sink = match marks {
        Some(p) => {
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .with_context(|| format!("opening {}", p.display()))?;
            // Terminate a torn tail so the next mark starts on its own line.
            if fs::read(p)?.last().is_some_and(|&b| b != b'\n') {
                writeln!(f)?;
            }
            Some(Mutex::new(f))
        }
        None => None,
    };
    let workers = sessions.len();
    let shared: &[GameRecord] = records;
    let results: Vec<Vec<(usize, Result<Vec<AnnotatedMove>>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = sessions
            .iter_mut()
            .enumerate()
            .map(|(w, session)| {
                let mine: Vec<usize> = todo.iter().copied().filter(|i| i % workers == w).collect();
                let sink = &sink;
                scope.spawn(move || {
                    mine.into_iter()
                        .map(|i| {
                            let result = annotate_game(session, &shared[i], visits);
                            if let (Ok(a), Some(sink)) = (&result, sink) {
                                let mark = Mark {
                                    game: i,
                                    annotations: a.clone(),
                                };
                                let mut f = sink.lock().expect("marks lock");
                                let written = serde_json::to_string(&mark)
                                    .map_err(anyhow::Error::from)
                                    .and_then(|s| Ok(writeln!(f, "{s}")?));
                                if let Err(e) = written {
                                    warn!("could not record completion of game {i}: {e}");
                                }
                            }
                            (i, result)
                        })
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("annotation worker panicked")).collect()
    });
    let mut merged: Vec<(usize, Result<Vec<AnnotatedMove>>)> = results.into_iter().flatten().collect();
    merged.sort_by_key(|(i, _)| *i);
    for (i, result) in merged {
        match result {
            Ok(a) => {
                records[i].annotations = Some(a);
                report.annotated += 1;
            }
            Err(e) => {
                warn!("game {i} left unannotated: {e:#}");
                report.failed.push(i);
            }
        }
    }
    info!(
        "annotated {} games ({} already complete, {} failed)",
        report.annotated,
        report.resumed,
        report.failed.len()
    );
    Ok(report)
}
