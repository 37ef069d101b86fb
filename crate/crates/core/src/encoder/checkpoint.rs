//! Checkpoint layout, all integers little-endian:
//!
//! ```text
//! "SEQK" | version: u16 = 1 | header_len: u32 | header (UTF-8 JSON)
//!        | count: u32 | count × (name_len: u16 | name | rows: u32 | cols: u32 | rows·cols × f32)
//! ```
//!
//! The JSON header holds the training configuration, the encoder shapes and
//! both log-temperatures. Tensors are named `video.pos`, `audio.w1`, and so
//! on, and use the same `f32` encoding as `SEQF` payloads.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::train::{Model, TrainConfig};
use super::{EncoderDims, EncoderParams, TENSOR_NAMES};
use crate::objective::Temperature;
use crate::{Error, Result};

pub const CKPT_MAGIC: &[u8; 4] = b"SEQK";
pub const CKPT_VERSION: u16 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: TrainConfig,
    dims: EncoderDims,
    log_lambda: f64,
    log_tau: f64,
}

pub fn encode_checkpoint(model: &Model) -> Result<Vec<u8>> {
    if !model.params.is_finite() {
        return Err(Error::NonFinite("checkpoint parameters".into()));
    }
    let header = serde_json::to_vec(&Header {
        config: model.config.clone(),
        dims: model.params.dims(),
        log_lambda: model.lambda.log_value,
        log_tau: model.tau.log_value,
    })
    .map_err(|e| Error::InvalidArgument(format!("cannot serialize header: {e}")))?;
    let tensors = model.params.named_tensors();
    let mut buf = Vec::new();
    buf.extend_from_slice(CKPT_MAGIC);
    buf.extend_from_slice(&CKPT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header);
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, (rows, cols), data) in tensors {
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(rows as u32).to_le_bytes());
        buf.extend_from_slice(&(cols as u32).to_le_bytes());
        for &v in data {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(buf)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Truncated(format!("{what} at offset {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Model> {
    if bytes.len() < 4 || &bytes[..4] != CKPT_MAGIC {
        return Err(Error::BadMagic { expected: "SEQK" });
    }
    let mut r = Cursor { bytes, pos: 4 };
    let version = r.u16("version")?;
    if version != CKPT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let header_len = r.u32("header length")? as usize;
    let header: Header = serde_json::from_slice(r.take(header_len, "header")?)
        .map_err(|e| Error::InvalidArgument(format!("bad checkpoint header: {e}")))?;
    header.config.validate()?;

    let count = r.u32("tensor count")? as usize;
    let mut tensors: HashMap<String, ((usize, usize), Vec<f64>)> = HashMap::new();
    for _ in 0..count {
        let name_len = r.u16("tensor name length")? as usize;
        let name = std::str::from_utf8(r.take(name_len, "tensor name")?)
            .map_err(|e| Error::InvalidArgument(format!("tensor name is not UTF-8: {e}")))?
            .to_string();
        let rows = r.u32("rows")? as usize;
        let cols = r.u32("cols")? as usize;
        let n = rows
            .checked_mul(cols)
            .filter(|n| n.checked_mul(4).is_some())
            .ok_or_else(|| Error::DimensionOverflow(format!("{name}: {rows}·{cols}")))?;
        let data: Vec<f64> = r
            .take(n * 4, &name)?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        if tensors.insert(name.clone(), ((rows, cols), data)).is_some() {
            return Err(Error::DuplicateId(name));
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::InvalidArgument(format!(
            "{} trailing bytes after the last tensor",
            bytes.len() - r.pos
        )));
    }

    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
    let mut params = EncoderParams::init(&mut rng, &header.dims)?;
    let expected: Vec<(String, (usize, usize))> = params
        .named_tensors()
        .into_iter()
        .map(|(n, shape, _)| (n, shape))
        .collect();
    for ((name, shape), slot) in expected.into_iter().zip(params.slices_mut()) {
        let (found_shape, data) = tensors
            .remove(&name)
            .ok_or_else(|| Error::InvalidArgument(format!("checkpoint lacks tensor {name}")))?;
        if found_shape != shape {
            return Err(Error::ShapeMismatch(format!(
                "{name} is {found_shape:?}, header implies {shape:?}"
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(name));
        }
        slot.copy_from_slice(&data);
    }
    if let Some(extra) = tensors.keys().next() {
        return Err(Error::InvalidArgument(format!("unknown tensor {extra}")));
    }
    debug_assert_eq!(TENSOR_NAMES.len() * 2, count);
    Ok(Model {
        config: header.config,
        params,
        lambda: Temperature {
            log_value: header.log_lambda,
        },
        tau: Temperature {
            log_value: header.log_tau,
        },
    })
}

pub fn save_checkpoint(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_checkpoint(model)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
