//! Sharded training data: clipped token grids, their latent codes, and the
//! assembled sequences, with a manifest of counts and content hashes.
//!
//! Shard record framing: `u32` little-endian payload length, then the payload
//! — `T·N²` token bytes followed by `(T−1)·H` little-endian `u32` code indices
//! when codes are present.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gobench_core::go::GameRecord;
use gobench_core::render::{tokenize_state, TokenGrid};
use gobench_ldm::input::{clip_frames, grid_input};
use gobench_ldm::Ldm;
use gobench_seq::corpus::write_corpus;
use gobench_seq::{build_sequence, SequenceSpec, TokenSequence};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::store::sha256_hex;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShardConfig {
    pub clip_len: usize,
    pub records_per_shard: usize,
}

impl Default for ShardConfig {
    fn default() -> Self {
        ShardConfig {
            clip_len: 6,
            records_per_shard: 4096,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShardFile {
    pub file: String,
    pub records: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShardManifest {
    pub spec: SequenceSpec,
    pub config: ShardConfig,
    pub board_size: usize,
    pub games: usize,
    pub skipped_games: usize,
    pub windows: usize,
    pub tokens: usize,
    pub shards: Vec<ShardFile>,
    pub sequences: ShardFile,
    /// Hash of the latent dynamics checkpoint used for the codes, if any.
    pub ldm_sha256: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShardRecord {
    pub grids: Vec<TokenGrid>,
    pub codes: Vec<Vec<usize>>,
}

/// Windows a game of `states` positions produces.
pub fn window_count(states: usize, clip_len: usize) -> usize {
    states.div_ceil(clip_len.max(1))
}

fn game_windows(record: &GameRecord, ldm: Option<&Ldm>, clip_len: usize) -> Result<Vec<ShardRecord>> {
    let grids: Vec<TokenGrid> = record.replay()?.iter().map(tokenize_state).collect();
    let clips = clip_frames(&grids, clip_len);
    clips
        .into_iter()
        .map(|clip| {
            let codes = match ldm {
                Some(m) => {
                    let frames = clip.iter().map(|g| grid_input(g, &m.config)).collect::<Result<Vec<_>, _>>()?;
                    let mut idx = m.encode(&frames)?.indices;
                    idx.truncate(clip.len() - 1);
                    idx
                }
                None => vec![],
            };
            Ok(ShardRecord { grids: clip, codes })
        })
        .collect()
}

fn encode_record(r: &ShardRecord) -> Vec<u8> {
    let mut payload: Vec<u8> = r.grids.iter().flat_map(|g| g.tokens.iter().map(|&t| t as u8)).collect();
    for row in &r.codes {
        for &c in row {
            payload.extend_from_slice(&(c as u32).to_le_bytes());
        }
    }
    let mut out = (payload.len() as u32).to_le_bytes().to_vec();
    out.extend(payload);
    out
}

/// Decodes one shard file written with the given geometry.
pub fn read_shard(bytes: &[u8], clip_len: usize, size: usize, horizon: usize, with_codes: bool) -> Result<Vec<ShardRecord>> {
    let cells = size * size;
    let expected = clip_len * cells + if with_codes { (clip_len - 1) * horizon * 4 } else { 0 };
    let mut out = Vec::new();
    let mut rest = bytes;
    while !rest.is_empty() {
        if rest.len() < 4 {
            bail!("truncated record header");
        }
        let n = u32::from_le_bytes(rest[..4].try_into().expect("4 bytes")) as usize;
        rest = &rest[4..];
        if n != expected || rest.len() < n {
            bail!("record of {n} bytes, expected {expected}");
        }
        let (payload, tail) = rest.split_at(n);
        rest = tail;
        let grids = payload[..clip_len * cells]
            .chunks(cells)
            .map(|c| TokenGrid {
                size,
                tokens: c.iter().map(|&b| b as u32).collect(),
            })
            .collect();
        let codes = if with_codes {
            payload[clip_len * cells..]
                .chunks(4 * horizon)
                .map(|row| {
                    row.chunks(4)
                        .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
                        .collect()
                })
                .collect()
        } else {
            vec![]
        };
        out.push(ShardRecord { grids, codes });
    }
    Ok(out)
}

/// Builds shards for `records` into `dir`. Games are processed by `workers`
/// threads (game `i` on worker `i % workers`) and merged in game order, so
/// the output does not depend on the worker count.
pub fn build_shards(
    records: &[GameRecord],
    ldm: Option<(&Ldm, String)>,
    spec: &SequenceSpec,
    config: &ShardConfig,
    workers: usize,
    dir: &Path,
) -> Result<ShardManifest> {
    spec.validate()?;
    if config.clip_len < 2 {
        bail!("clips need at least two frames");
    }
    let model = ldm.as_ref().map(|(m, _)| *m);
    if spec.mode.has_codes() {
        let Some(m) = model else {
            bail!("{} shards need a latent dynamics checkpoint", spec.mode.as_str());
        };
        if m.config.horizon != spec.horizon || m.config.fsq.codebook_size() != spec.latent_vocab as usize {
            bail!("latent dynamics checkpoint does not match the sequence spec");
        }
    }
    let Some(first) = records.first() else {
        bail!("empty record store");
    };
    let size = first.size;
    if spec.frame_tokens != size * size {
        bail!("spec expects {} frame tokens, boards are {size}x{size}", spec.frame_tokens);
    }
    let model = if spec.mode.has_codes() { model } else { None };
    let workers = workers.max(1);
    let per_worker: Vec<Vec<(usize, Result<Vec<ShardRecord>>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..records.len())
                        .step_by(workers)
                        .map(|i| {
                            let r = &records[i];
                            let result = if r.size != size {
                                Err(anyhow::anyhow!("board size {} differs from {size}", r.size))
                            } else {
                                game_windows(r, model, config.clip_len)
                            };
                            (i, result)
                        })
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("shard worker panicked")).collect()
    });
    let mut merged: Vec<(usize, Result<Vec<ShardRecord>>)> = per_worker.into_iter().flatten().collect();
    merged.sort_by_key(|(i, _)| *i);
    let mut windows = Vec::new();
    let mut skipped = 0;
    for (i, result) in merged {
        match result {
            Ok(w) => windows.extend(w),
            Err(e) => {
                warn!("skipping game {i}: {e:#}");
                skipped += 1;
            }
        }
    }

    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut shards = Vec::new();
    for (k, chunk) in windows.chunks(config.records_per_shard.max(1)).enumerate() {
        let bytes: Vec<u8> = chunk.iter().flat_map(encode_record).collect();
        let file = format!("shard-{k:05}.bin");
        fs::write(dir.join(&file), &bytes)?;
        shards.push(ShardFile {
            file,
            records: chunk.len(),
            sha256: sha256_hex(&bytes),
        });
    }
    let sequences: Vec<TokenSequence> = windows
        .iter()
        .map(|w| build_sequence(&w.grids, &w.codes, spec))
        .collect::<Result<_, _>>()?;
    let mut bytes = Vec::new();
    let meta = write_corpus(&mut bytes, &sequences, spec)?;
    fs::write(dir.join("sequences.bin"), &bytes)?;
    let manifest = ShardManifest {
        spec: spec.clone(),
        config: config.clone(),
        board_size: size,
        games: records.len() - skipped,
        skipped_games: skipped,
        windows: windows.len(),
        tokens: meta.tokens,
        shards,
        sequences: ShardFile {
            file: "sequences.bin".into(),
            records: sequences.len(),
            sha256: sha256_hex(&bytes),
        },
        ldm_sha256: if spec.mode.has_codes() { ldm.map(|(_, h)| h) } else { None },
    };
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Reads every shard listed in a manifest, checking hashes and counts.
pub fn load_shards(dir: &Path) -> Result<(ShardManifest, Vec<ShardRecord>)> {
    let manifest: ShardManifest = serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
    let mut out = Vec::new();
    for s in &manifest.shards {
        let bytes = fs::read(dir.join(&s.file))?;
        if sha256_hex(&bytes) != s.sha256 {
            bail!("{} does not match its manifest hash", s.file);
        }
        let records = read_shard(
            &bytes,
            manifest.config.clip_len,
            manifest.board_size,
            manifest.spec.horizon,
            manifest.spec.mode.has_codes(),
        )?;
        if records.len() != s.records {
            bail!("{} holds {} records, manifest says {}", s.file, records.len(), s.records);
        }
        out.extend(records);
    }
    Ok((manifest, out))
}
