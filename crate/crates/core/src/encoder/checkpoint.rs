//! Encoder checkpoint container.
//!
//! ```text
//! offset 0   8 bytes   magic "BGCLCKPT"
//! offset 8   u64 LE    header length H in bytes
//! offset 16  H bytes   UTF-8 JSON header (CheckpointHeader)
//! then       f32 LE    weights of layer 0, 1, .., L-1, each row-major D_in x D_out
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Activation, BlockEncoder, GcnLayer};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Real};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"BGCLCKPT";
const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub version: u32,
    /// `[D0, D1, .., DL]`
    pub layer_dims: Vec<usize>,
    pub activations: Vec<String>,
    /// Half-open `[start, end)` layer ranges.
    pub blocks: Vec<[usize; 2]>,
    pub seed: u64,
    pub dtype: String,
}

pub fn save_checkpoint<T: Real>(enc: &BlockEncoder<T>, seed: u64, path: impl AsRef<Path>) -> Result<()> {
    let header = CheckpointHeader {
        version: FORMAT_VERSION,
        layer_dims: enc.dims(),
        activations: enc.layers().iter().map(|l| l.activation().to_string()).collect(),
        blocks: enc.blocks().iter().map(|r| [r.start, r.end]).collect(),
        seed,
        dtype: "f32".into(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    for w in enc.weights() {
        for v in w.as_slice() {
            buf.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
    }
    fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

pub fn load_checkpoint<T: Real>(path: impl AsRef<Path>) -> Result<(BlockEncoder<T>, CheckpointHeader)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |m: &str| Error::Checkpoint(m.to_string());
    if bytes.len() < 16 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(bad("missing magic bytes"));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let payload_start = 16usize
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| bad("header length exceeds file size"))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[16..payload_start])
        .map_err(|e| Error::Checkpoint(format!("header: {e}")))?;
    if header.version != FORMAT_VERSION || header.dtype != "f32" {
        return Err(bad("unsupported version or dtype"));
    }
    let dims = &header.layer_dims;
    if dims.len() < 2 || header.activations.len() != dims.len() - 1 {
        return Err(bad("layer dims and activations disagree"));
    }
    let expected: usize = dims.windows(2).map(|w| w[0] * w[1]).sum::<usize>() * 4;
    let payload = &bytes[payload_start..];
    if payload.len() != expected {
        return Err(Error::Checkpoint(format!(
            "payload holds {} bytes, expected {expected}",
            payload.len()
        )));
    }
    let mut floats = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")));
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for (l, w) in dims.windows(2).enumerate() {
        let data: Vec<T> = floats.by_ref().take(w[0] * w[1]).map(|v| T::of(v as f64)).collect();
        let act: Activation = header.activations[l].parse().map_err(|e: String| Error::Checkpoint(e))?;
        layers.push(GcnLayer::new(DenseMatrix::from_vec(w[0], w[1], data)?, act));
    }
    let blocks = header.blocks.iter().map(|b| b[0]..b[1]).collect();
    let enc = BlockEncoder::new(layers, blocks)?;
    Ok((enc, header))
}
