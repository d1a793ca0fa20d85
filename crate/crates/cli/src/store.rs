//! Record store: one JSON game record per line.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gobench_core::go::{GameRecord, Source};
use gobench_core::sgf;
use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_hash(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).with_context(|| format!("reading {}", path.display()))?))
}

pub fn store_bytes(records: &[GameRecord]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    Ok(out)
}

/// Content hash of a store as it would be written.
pub fn store_hash(records: &[GameRecord]) -> Result<String> {
    Ok(sha256_hex(&store_bytes(records)?))
}

pub fn write_store(path: &Path, records: &[GameRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    out.write_all(&store_bytes(records)?)?;
    out.flush()?;
    Ok(())
}

pub fn read_store(path: &Path) -> Result<Vec<GameRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: GameRecord =
            serde_json::from_str(&line).with_context(|| format!("{}:{}: bad record", path.display(), i + 1))?;
        records.push(r);
    }
    Ok(records)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestFilter {
    /// Keep only games on this board size.
    pub size: Option<usize>,
    /// Tag applied to records read from SGF (JSON records keep their own).
    pub source: Option<Source>,
}

#[derive(Debug, Default)]
pub struct Ingested {
    pub records: Vec<GameRecord>,
    /// One message per unreadable file or line, with its location.
    pub errors: Vec<String>,
    pub filtered: usize,
}

fn input_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = fs::read_dir(p)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
            inner.sort();
            files.extend(input_files(&inner)?);
        } else if matches!(p.extension().and_then(|e| e.to_str()), Some("sgf" | "jsonl" | "json")) {
            files.push(p.clone());
        } else if !p.exists() {
            bail!("{} does not exist", p.display());
        }
    }
    Ok(files)
}

/// Reads SGF files and JSON-lines stores (directories are walked in name
/// order). Unreadable games are logged and skipped.
pub fn ingest(paths: &[PathBuf], filter: &IngestFilter) -> Result<Ingested> {
    let mut out = Ingested::default();
    for file in input_files(paths)? {
        let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
        let parsed: Vec<Result<GameRecord, String>> = if file.extension().is_some_and(|e| e == "sgf") {
            match sgf::records_from_text(&text) {
                Ok(rs) => rs
                    .into_iter()
                    .map(|mut r| {
                        if let Some(s) = filter.source {
                            r.source = s;
                        }
                        Ok(r)
                    })
                    .collect(),
                Err(e) => vec![Err(format!("{}: {e}", file.display()))],
            }
        } else {
            text.lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("{}:{}: {e}", file.display(), i + 1)))
                .collect()
        };
        for p in parsed {
            match p.and_then(|r| r.replay().map(|_| r).map_err(|e| format!("{}: {e}", file.display()))) {
                Ok(r) if filter.size.is_some_and(|s| s != r.size) => out.filtered += 1,
                Ok(r) => out.records.push(r),
                Err(e) => {
                    warn!("skipping {e}");
                    out.errors.push(e);
                }
            }
        }
    }
    if out.records.is_empty() {
        bail!("no records ingested ({} errors, {} filtered)", out.errors.len(), out.filtered);
    }
    Ok(out)
}
