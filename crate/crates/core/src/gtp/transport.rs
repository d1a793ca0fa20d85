use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::net::TcpStream;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::GtpError;

/// Line-oriented byte channel to an engine.
pub trait Transport: Send {
    fn send_line(&mut self, line: &str) -> Result<(), GtpError>;
    /// Next line without its terminator. `Err(Closed)` at end of stream.
    fn recv_line(&mut self, timeout: Duration) -> Result<String, GtpError>;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TransportSpec {
    /// Spawn `program args...` and talk over its standard streams.
    Process { program: String, args: Vec<String> },
    /// Connect to `host:port`.
    Tcp { address: String },
}

impl TransportSpec {
    /// Splits a shell-like command line on whitespace.
    pub fn process(command_line: &str) -> TransportSpec {
        let mut parts = command_line.split_whitespace().map(String::from);
        TransportSpec::Process {
            program: parts.next().unwrap_or_default(),
            args: parts.collect(),
        }
    }

    pub fn connect(&self) -> Result<Box<dyn Transport>, GtpError> {
        match self {
            TransportSpec::Process { program, args } => Ok(Box::new(ChildTransport::spawn(program, args)?)),
            TransportSpec::Tcp { address } => Ok(Box::new(TcpTransport::connect(address)?)),
        }
    }
}

pub struct ChildTransport {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl ChildTransport {
    pub fn spawn(program: &str, args: &[String]) -> Result<ChildTransport, GtpError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| GtpError::Connect(format!("{program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let mut line = String::new();
                match reader.read_line(&mut line) {
                    Ok(0) => break,
                    Ok(_) => {
                        let trimmed = line.trim_end_matches('\n').to_string();
                        if tx.send(Ok(trimmed)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });
        Ok(ChildTransport { child, stdin, lines: rx })
    }
}

impl Transport for ChildTransport {
    fn send_line(&mut self, line: &str) -> Result<(), GtpError> {
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| GtpError::Io(e.to_string()))
    }

    fn recv_line(&mut self, timeout: Duration) -> Result<String, GtpError> {
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(GtpError::Io(e.to_string())),
            Err(RecvTimeoutError::Timeout) => Err(GtpError::Timeout),
            Err(RecvTimeoutError::Disconnected) => Err(GtpError::Closed),
        }
    }
}

impl Drop for ChildTransport {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct TcpTransport {
    writer: TcpStream,
    reader: BufReader<TcpStream>,
}

impl TcpTransport {
    pub fn connect(address: &str) -> Result<TcpTransport, GtpError> {
        let stream = TcpStream::connect(address).map_err(|e| GtpError::Connect(format!("{address}: {e}")))?;
        let reader = BufReader::new(stream.try_clone().map_err(|e| GtpError::Io(e.to_string()))?);
        Ok(TcpTransport { writer: stream, reader })
    }
}

impl Transport for TcpTransport {
    fn send_line(&mut self, line: &str) -> Result<(), GtpError> {
        self.writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.flush())
            .map_err(|e| GtpError::Io(e.to_string()))
    }

    fn recv_line(&mut self, timeout: Duration) -> Result<String, GtpError> {
        self.reader
            .get_ref()
            .set_read_timeout(Some(timeout))
            .map_err(|e| GtpError::Io(e.to_string()))?;
        let mut line = String::new();
        match self.reader.read_line(&mut line) {
            Ok(0) => Err(GtpError::Closed),
            Ok(_) => Ok(line.trim_end_matches('\n').to_string()),
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => Err(GtpError::Timeout),
            Err(e) => Err(GtpError::Io(e.to_string())),
        }
    }
}
