//! Parameter checkpoints: magic bytes, a little-endian u64 header length, a
//! JSON header (format version, tensor names and shapes, caller metadata),
//! then every tensor's f64 values little-endian in header order.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::params::ParamStore;
use crate::tensor::Tensor;
use crate::NnError;

pub const MAGIC: &[u8; 8] = b"GBNNCK\x00\x01";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format_version: u32,
    pub tensors: Vec<TensorEntry>,
    pub meta: serde_json::Value,
}

pub fn write_checkpoint(out: &mut impl Write, store: &ParamStore, meta: serde_json::Value) -> Result<(), NnError> {
    let header = Header {
        format_version: FORMAT_VERSION,
        tensors: store
            .names()
            .iter()
            .zip(store.values())
            .map(|(n, t)| TensorEntry {
                name: n.clone(),
                shape: t.shape.clone(),
            })
            .collect(),
        meta,
    };
    let json = serde_json::to_vec(&header).map_err(|e| NnError::Checkpoint(e.to_string()))?;
    let io = |e: std::io::Error| NnError::Checkpoint(e.to_string());
    out.write_all(MAGIC).map_err(io)?;
    out.write_all(&(json.len() as u64).to_le_bytes()).map_err(io)?;
    out.write_all(&json).map_err(io)?;
    for t in store.values() {
        let mut buf = Vec::with_capacity(t.len() * 8);
        for x in &t.data {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        out.write_all(&buf).map_err(io)?;
    }
    Ok(())
}

/// Reads a checkpoint into a fresh store (registration order = file order).
pub fn read_checkpoint(input: &mut impl Read) -> Result<(ParamStore, serde_json::Value), NnError> {
    let io = |e: std::io::Error| NnError::Checkpoint(e.to_string());
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(NnError::Checkpoint("bad magic bytes".into()));
    }
    let mut len = [0u8; 8];
    input.read_exact(&mut len).map_err(io)?;
    let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
    input.read_exact(&mut json).map_err(io)?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| NnError::Checkpoint(e.to_string()))?;
    if header.format_version != FORMAT_VERSION {
        return Err(NnError::Checkpoint(format!("unsupported version {}", header.format_version)));
    }
    let mut store = ParamStore::new();
    for entry in header.tensors {
        let n: usize = entry.shape.iter().product();
        let mut raw = vec![0u8; n * 8];
        input.read_exact(&mut raw).map_err(io)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        store.add(&entry.name, Tensor::from_vec(&entry.shape, data)?);
    }
    Ok((store, header.meta))
}

/// Copies values from `loaded` into `target` by name; shapes must agree.
pub fn load_into(target: &mut ParamStore, loaded: &ParamStore) -> Result<(), NnError> {
    if target.len() != loaded.len() {
        return Err(NnError::Checkpoint(format!(
            "checkpoint has {} tensors, model expects {}",
            loaded.len(),
            target.len()
        )));
    }
    let ids: Vec<_> = target.ids().collect();
    for id in ids {
        let name = target.name(id).to_string();
        let src = loaded
            .find(&name)
            .ok_or_else(|| NnError::Checkpoint(format!("missing tensor {name}")))?;
        if loaded.value(src).shape != target.value(id).shape {
            return Err(NnError::Checkpoint(format!("shape mismatch for {name}")));
        }
        target.value_mut(id).data.copy_from_slice(loaded.get(src));
    }
    Ok(())
}
