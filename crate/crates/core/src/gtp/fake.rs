//! In-process scripted GTP engine used by tests and by the `fake-engine` CLI helper.

use std::collections::VecDeque;
use std::io::{BufRead, Write};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{parse_vertex, vertex, GtpError, Transport};
use crate::go::{BoardState, Move};

/// One expected command (`name args`, without id) and its canned reply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub command: String,
    /// `Ok(text)` is sent as `=`, `Err(message)` as `?`.
    pub reply: Result<String, String>,
}

impl TranscriptEntry {
    pub fn ok(command: &str, reply: &str) -> TranscriptEntry {
        TranscriptEntry {
            command: command.into(),
            reply: Ok(reply.into()),
        }
    }

    pub fn err(command: &str, message: &str) -> TranscriptEntry {
        TranscriptEntry {
            command: command.into(),
            reply: Err(message.into()),
        }
    }
}

#[derive(Clone, Debug)]
pub enum FakeBehavior {
    /// Answer from a fixed transcript, in order. Handshake commands not in the
    /// transcript get default answers.
    Transcript(VecDeque<TranscriptEntry>),
    /// Keep a board and answer `genmove` with a legal move and
    /// `kata-analyze` with synthetic candidates.
    Rules,
}

#[derive(Clone, Debug)]
pub struct ScriptedEngine {
    behavior: FakeBehavior,
    board: BoardState,
    out: VecDeque<String>,
    replies_sent: usize,
    /// Emitted before the first reply.
    pub garbage_prefix: Option<String>,
    /// Omit the blank line after replies.
    pub drop_terminator: bool,
    /// Added to every reply id.
    pub id_skew: u64,
    /// Never reply.
    pub silent: bool,
    /// Echo an occupied point on `genmove` (adversarial engine).
    pub play_occupied: bool,
}

impl ScriptedEngine {
    fn with_behavior(behavior: FakeBehavior) -> ScriptedEngine {
        ScriptedEngine {
            behavior,
            board: BoardState::new(19, 7.0).expect("19x19"),
            out: VecDeque::new(),
            replies_sent: 0,
            garbage_prefix: None,
            drop_terminator: false,
            id_skew: 0,
            silent: false,
            play_occupied: false,
        }
    }

    pub fn transcript(entries: Vec<TranscriptEntry>) -> ScriptedEngine {
        ScriptedEngine::with_behavior(FakeBehavior::Transcript(entries.into()))
    }

    pub fn rules() -> ScriptedEngine {
        ScriptedEngine::with_behavior(FakeBehavior::Rules)
    }

    pub fn board(&self) -> &BoardState {
        &self.board
    }

    fn builtin(name: &str) -> Option<Result<String, String>> {
        match name {
            "protocol_version" => Some(Ok("2".into())),
            "name" => Some(Ok("fake-engine".into())),
            "version" => Some(Ok("1.0".into())),
            "quit" => Some(Ok(String::new())),
            _ => None,
        }
    }

    fn rules_reply(&mut self, name: &str, args: &[&str]) -> Result<String, String> {
        let size = self.board.size();
        let komi = self.board.komi();
        match name {
            "boardsize" => {
                let n: usize = args.first().and_then(|a| a.parse().ok()).ok_or("bad boardsize")?;
                self.board = BoardState::new(n, komi).map_err(|_| "unacceptable size".to_string())?;
                Ok(String::new())
            }
            "clear_board" => {
                self.board = BoardState::new(size, komi).expect("valid size");
                Ok(String::new())
            }
            "komi" => {
                let k: f64 = args.first().and_then(|a| a.parse().ok()).ok_or("bad komi")?;
                self.board = BoardState::new(size, k).expect("valid size");
                Ok(String::new())
            }
            "play" => {
                let mv = args
                    .get(1)
                    .and_then(|v| parse_vertex(v, size).ok())
                    .ok_or("bad vertex")?;
                self.board.apply(mv).map_err(|_| "illegal move".to_string())?;
                Ok(String::new())
            }
            "genmove" => {
                if self.play_occupied {
                    if let Some(i) = self.board.cells().iter().position(|c| c.color().is_some()) {
                        return Ok(vertex(Move::from_index(i, size), size));
                    }
                }
                let mv = self.preferred_moves().into_iter().next().unwrap_or(Move::Pass);
                self.board.apply(mv).map_err(|e| e.to_string())?;
                Ok(vertex(mv, size))
            }
            "kata-analyze" => {
                let visits: u64 = args.first().and_then(|a| a.parse().ok()).unwrap_or(100);
                let mut text = String::new();
                for (order, mv) in self.preferred_moves().into_iter().take(5).enumerate() {
                    let winrate = 0.6 - 0.05 * order as f64;
                    let v = visits.saturating_sub(10 * order as u64).max(1);
                    text.push_str(&format!(
                        "info move {} visits {v} winrate {winrate:.2} scoreLead {:.1} order {order} pv {} ",
                        vertex(mv, size),
                        2.0 - order as f64,
                        vertex(mv, size)
                    ));
                }
                if text.is_empty() {
                    text = "info move pass visits 1 winrate 0.50 scoreLead 0.0 order 0".into();
                }
                Ok(text.trim_end().to_string())
            }
            _ => Err("unknown command".into()),
        }
    }

    /// Legal placements ordered by distance to the center, then point index.
    fn preferred_moves(&self) -> Vec<Move> {
        let Ok(moves) = self.board.legal_moves() else {
            return vec![];
        };
        let n = self.board.size() as i64;
        let mut places: Vec<Move> = moves.into_iter().filter(|m| m.is_place()).collect();
        places.sort_by_key(|m| match *m {
            Move::Place { col, row } => {
                let (dc, dr) = (2 * col as i64 - (n - 1), 2 * row as i64 - (n - 1));
                (dc * dc + dr * dr, row as i64 * n + col as i64)
            }
            _ => (i64::MAX, 0),
        });
        places
    }

    fn handle(&mut self, request: &str) {
        let request = request.trim();
        if request.is_empty() {
            return;
        }
        let mut parts = request.split_whitespace();
        let mut first = parts.next().unwrap_or("");
        let id: Option<u64> = first.parse().ok();
        if id.is_some() {
            first = parts.next().unwrap_or("");
        }
        let name = first.to_string();
        let args: Vec<&str> = parts.collect();
        let command = std::iter::once(name.as_str())
            .chain(args.iter().copied())
            .collect::<Vec<_>>()
            .join(" ");

        let reply = match &mut self.behavior {
            FakeBehavior::Transcript(entries) => match entries.front() {
                Some(e) if e.command == command => entries.pop_front().map(|e| e.reply).expect("front"),
                _ => Self::builtin(&name)
                    .unwrap_or_else(|| Err(format!("unexpected command: {command}"))),
            },
            FakeBehavior::Rules => match Self::builtin(&name) {
                Some(r) => r,
                None => self.rules_reply(&name, &args),
            },
        };
        if self.silent {
            return;
        }
        if self.replies_sent == 0 {
            if let Some(g) = self.garbage_prefix.take() {
                self.out.push_back(g);
            }
        }
        self.replies_sent += 1;
        let (marker, text) = match reply {
            Ok(t) => ('=', t),
            Err(t) => ('?', t),
        };
        let id_text = id.map(|i| (i + self.id_skew).to_string()).unwrap_or_default();
        let mut lines = text.lines();
        let head = lines.next().unwrap_or("");
        if head.is_empty() {
            self.out.push_back(format!("{marker}{id_text}"));
        } else {
            self.out.push_back(format!("{marker}{id_text} {head}"));
        }
        for l in lines {
            self.out.push_back(l.to_string());
        }
        if !self.drop_terminator {
            self.out.push_back(String::new());
        }
    }
}

impl Transport for ScriptedEngine {
    fn send_line(&mut self, line: &str) -> Result<(), GtpError> {
        self.handle(line);
        Ok(())
    }

    fn recv_line(&mut self, _timeout: Duration) -> Result<String, GtpError> {
        match self.out.pop_front() {
            Some(l) => Ok(l),
            None if self.silent => Err(GtpError::Timeout),
            None => Err(GtpError::Closed),
        }
    }
}

/// Runs `engine` over a line stream until `quit` or end of input.
pub fn serve(engine: &mut ScriptedEngine, input: impl BufRead, mut output: impl Write) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        let quit = line.split_whitespace().any(|t| t == "quit");
        engine.handle(&line);
        while let Some(l) = engine.out.pop_front() {
            writeln!(output, "{l}")?;
        }
        output.flush()?;
        if quit {
            break;
        }
    }
    Ok(())
}
