//! Binary sequence corpus: per record `u32 n`, `n` little-endian `u32` ids,
//! `n` mask bytes, `u32 m`, `m` `u32` step offsets. A JSON sidecar carries the
//! spec and counts.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::sequence::{SequenceSpec, TokenSequence};
use crate::SeqError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub spec: SequenceSpec,
    pub sequences: usize,
    pub tokens: usize,
}

fn io(e: std::io::Error) -> SeqError {
    SeqError::Io(e.to_string())
}

pub fn write_corpus(out: &mut impl Write, sequences: &[TokenSequence], spec: &SequenceSpec) -> Result<CorpusMeta, SeqError> {
    let mut tokens = 0;
    for s in sequences {
        out.write_all(&(s.ids.len() as u32).to_le_bytes()).map_err(io)?;
        for &t in &s.ids {
            out.write_all(&t.to_le_bytes()).map_err(io)?;
        }
        let mask: Vec<u8> = s.loss_mask.iter().map(|&m| m as u8).collect();
        out.write_all(&mask).map_err(io)?;
        out.write_all(&(s.steps.len() as u32).to_le_bytes()).map_err(io)?;
        for &o in &s.steps {
            out.write_all(&(o as u32).to_le_bytes()).map_err(io)?;
        }
        tokens += s.ids.len();
    }
    Ok(CorpusMeta {
        spec: spec.clone(),
        sequences: sequences.len(),
        tokens,
    })
}

fn read_u32(input: &mut impl Read) -> Result<Option<u32>, SeqError> {
    let mut b = [0u8; 4];
    match input.read_exact(&mut b) {
        Ok(()) => Ok(Some(u32::from_le_bytes(b))),
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => Ok(None),
        Err(e) => Err(io(e)),
    }
}

fn need_u32(input: &mut impl Read) -> Result<u32, SeqError> {
    read_u32(input)?.ok_or_else(|| SeqError::Io("truncated corpus record".into()))
}

pub fn read_corpus(input: &mut impl Read) -> Result<Vec<TokenSequence>, SeqError> {
    let mut out = Vec::new();
    while let Some(n) = read_u32(input)? {
        let ids = (0..n).map(|_| need_u32(input)).collect::<Result<Vec<_>, _>>()?;
        let mut mask = vec![0u8; n as usize];
        input.read_exact(&mut mask).map_err(io)?;
        let m = need_u32(input)?;
        let steps = (0..m)
            .map(|_| need_u32(input).map(|v| v as usize))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(TokenSequence {
            ids,
            loss_mask: mask.into_iter().map(|b| b != 0).collect(),
            steps,
        });
    }
    Ok(out)
}
