//! Go Text Protocol client.
//!
//! Requests are framed as `<id> <name> <args>\n`; replies are `=<id> text`
//! or `?<id> message`, terminated by an empty line. One request is in flight
//! per session at any time.

mod analysis;
mod fake;
mod transport;

use std::time::Duration;

use thiserror::Error;

use crate::go::{Color, GameRecord, Move};

pub use analysis::{parse_analysis, AnalysisLine};
pub use fake::{serve, FakeBehavior, ScriptedEngine, TranscriptEntry};
pub use transport::{ChildTransport, TcpTransport, Transport, TransportSpec};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
pub const DEFAULT_ANALYSIS_COMMAND: &str = "kata-analyze";
pub const DEFAULT_VISITS: u32 = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GtpError {
    #[error("cannot connect to engine: {0}")]
    Connect(String),
    #[error("handshake failed, engine sent {captured:?}")]
    Handshake { captured: String },
    #[error("handshake timed out")]
    HandshakeTimeout,
    #[error("engine error: {0}")]
    Engine(String),
    #[error("framing error: {0}")]
    Framing(String),
    #[error("timed out waiting for engine reply")]
    Timeout,
    #[error("engine closed the connection")]
    Closed,
    #[error("i/o error: {0}")]
    Io(String),
    #[error("unparsable vertex {0:?}")]
    BadVertex(String),
    #[error("analysis reply contained no info blocks")]
    NoAnalysis,
    #[error("malformed analysis field {key}={value:?}")]
    MalformedField { key: String, value: String },
}

/// GTP column letters skip `I`.
const COLUMNS: &[u8] = b"ABCDEFGHJKLMNOPQRST";

/// Vertex text such as `E5`: column letter (no `I`), row counted from the bottom.
pub fn vertex(mv: Move, size: usize) -> String {
    match mv {
        Move::Place { col, row } => format!("{}{}", COLUMNS[col as usize] as char, size - row as usize),
        Move::Pass => "pass".into(),
        Move::Resign => "resign".into(),
    }
}

pub fn parse_vertex(text: &str, size: usize) -> Result<Move, GtpError> {
    let t = text.trim();
    let lower = t.to_ascii_lowercase();
    match lower.as_str() {
        "pass" => return Ok(Move::Pass),
        "resign" => return Ok(Move::Resign),
        _ => {}
    }
    let bad = || GtpError::BadVertex(t.to_string());
    let mut chars = t.chars();
    let letter = chars.next().ok_or_else(bad)?.to_ascii_uppercase();
    let col = COLUMNS.iter().position(|&c| c as char == letter).ok_or_else(bad)?;
    let number: usize = chars.as_str().parse().map_err(|_| bad())?;
    if col >= size || number == 0 || number > size {
        return Err(bad());
    }
    Ok(Move::place(col, size - number))
}

pub struct GtpSession {
    transport: Box<dyn Transport>,
    next_id: u64,
    timeout: Duration,
    analysis_command: String,
    request_log: Vec<u8>,
    pub engine_name: String,
    pub engine_version: String,
    pub protocol_version: String,
}

impl std::fmt::Debug for GtpSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GtpSession")
            .field("next_id", &self.next_id)
            .field("engine_name", &self.engine_name)
            .field("engine_version", &self.engine_version)
            .finish()
    }
}

impl GtpSession {
    /// Connects through `spec` and performs the `protocol_version` / `name` / `version` handshake.
    pub fn open(spec: &TransportSpec, timeout: Duration) -> Result<GtpSession, GtpError> {
        let transport = spec.connect()?;
        GtpSession::with_transport(transport, timeout)
    }

    pub fn with_transport(transport: Box<dyn Transport>, timeout: Duration) -> Result<GtpSession, GtpError> {
        let mut session = GtpSession {
            transport,
            next_id: 1,
            timeout,
            analysis_command: DEFAULT_ANALYSIS_COMMAND.to_string(),
            request_log: Vec::new(),
            engine_name: String::new(),
            engine_version: String::new(),
            protocol_version: String::new(),
        };
        session.protocol_version = session.send("protocol_version", &[]).map_err(|e| match e {
            GtpError::Framing(captured) => GtpError::Handshake { captured },
            GtpError::Timeout => GtpError::HandshakeTimeout,
            other => other,
        })?;
        session.engine_name = session.send("name", &[])?;
        session.engine_version = session.send("version", &[])?;
        Ok(session)
    }

    pub fn set_analysis_command(&mut self, command: &str) {
        self.analysis_command = command.to_string();
    }

    /// Every byte written to the engine so far.
    pub fn request_log(&self) -> &[u8] {
        &self.request_log
    }

    /// Issues one command and waits for its reply text.
    pub fn send(&mut self, name: &str, args: &[&str]) -> Result<String, GtpError> {
        let id = self.next_id;
        self.next_id += 1;
        let mut line = format!("{id} {name}");
        for a in args {
            line.push(' ');
            line.push_str(a);
        }
        line.push('\n');
        self.request_log.extend_from_slice(line.as_bytes());
        self.transport.send_line(&line)?;
        self.read_reply(id)
    }

    fn read_reply(&mut self, id: u64) -> Result<String, GtpError> {
        let mut first = self.transport.recv_line(self.timeout)?;
        while first.trim().is_empty() {
            first = self.transport.recv_line(self.timeout)?;
        }
        let first = first.trim_end_matches('\r').to_string();
        let success = match first.as_bytes()[0] {
            b'=' => true,
            b'?' => false,
            _ => return Err(GtpError::Framing(first)),
        };
        let rest = &first[1..];
        let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
        let reply_id: Option<u64> = digits.parse().ok();
        if reply_id != Some(id) {
            return Err(GtpError::Framing(format!("reply id {reply_id:?} does not match request id {id}")));
        }
        let mut text = rest[digits.len()..].trim_start_matches(' ').to_string();
        loop {
            let line = match self.transport.recv_line(self.timeout) {
                Ok(l) => l,
                Err(GtpError::Closed) => {
                    return Err(GtpError::Framing("missing blank-line terminator".into()));
                }
                Err(e) => return Err(e),
            };
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                break;
            }
            text.push('\n');
            text.push_str(line);
        }
        if success {
            Ok(text)
        } else {
            Err(GtpError::Engine(text))
        }
    }

    /// Loads a position by replaying moves: `clear_board`, `boardsize`, `komi`, then one `play` per move.
    pub fn setup_moves(&mut self, size: usize, komi: f64, moves: &[Move]) -> Result<(), GtpError> {
        self.send("clear_board", &[])?;
        self.send("boardsize", &[&size.to_string()])?;
        self.send("komi", &[&format_komi(komi)])?;
        let mut color = Color::Black;
        for &mv in moves {
            if mv == Move::Resign {
                break;
            }
            let c = color.letter().to_string();
            self.send("play", &[&c, &vertex(mv, size)])?;
            color = color.opponent();
        }
        Ok(())
    }

    pub fn setup_position(&mut self, record: &GameRecord) -> Result<(), GtpError> {
        self.setup_moves(record.size, record.komi, &record.moves)
    }

    pub fn genmove(&mut self, color: Color, size: usize) -> Result<Move, GtpError> {
        let reply = self.send("genmove", &[&color.letter().to_string()])?;
        parse_vertex(&reply, size)
    }

    /// Runs the configured analysis command and parses its `info` blocks.
    pub fn analyze(&mut self, visits: u32, size: usize) -> Result<Vec<AnalysisLine>, GtpError> {
        let command = self.analysis_command.clone();
        let reply = self.send(&command, &[&visits.to_string()])?;
        parse_analysis(&reply, size)
    }

    pub fn quit(mut self) -> Result<(), GtpError> {
        self.send("quit", &[]).map(|_| ())
    }
}

fn format_komi(komi: f64) -> String {
    if komi.fract() == 0.0 {
        format!("{}", komi as i64)
    } else {
        format!("{komi}")
    }
}
