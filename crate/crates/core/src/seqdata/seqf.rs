//! `SEQF` binary layout, all integers little-endian:
//!
//! ```text
//! "SEQF" | version: u16 = 1 | id_len: u16 | id (UTF-8) | T: u32 | c: u32 | T·c × f32 (row-major)
//! ```

use std::path::Path;

use ndarray::Array2;

use super::FeatureSequence;
use crate::{Error, Result};

pub const SEQF_MAGIC: &[u8; 4] = b"SEQF";
pub const SEQF_VERSION: u16 = 1;

pub fn encode_seqf(seq: &FeatureSequence) -> Result<Vec<u8>> {
    if let Some(pos) = seq.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("sequence {}, element {pos}", seq.id())));
    }
    let id = seq.id().as_bytes();
    let mut buf = Vec::with_capacity(16 + id.len() + 4 * seq.data().len());
    buf.extend_from_slice(SEQF_MAGIC);
    buf.extend_from_slice(&SEQF_VERSION.to_le_bytes());
    buf.extend_from_slice(&(id.len() as u16).to_le_bytes());
    buf.extend_from_slice(id);
    let t = u32::try_from(seq.len()).map_err(|_| Error::DimensionOverflow("T exceeds u32".into()))?;
    let c = u32::try_from(seq.dim()).map_err(|_| Error::DimensionOverflow("c exceeds u32".into()))?;
    buf.extend_from_slice(&t.to_le_bytes());
    buf.extend_from_slice(&c.to_le_bytes());
    for v in seq.data().iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(buf)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::Truncated(format!(
                    "{what} needs {n} bytes at offset {}, file has {}",
                    self.pos,
                    self.bytes.len()
                ))
            })?;
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

pub fn decode_seqf(bytes: &[u8]) -> Result<FeatureSequence> {
    if bytes.len() < 4 || &bytes[..4] != SEQF_MAGIC {
        return Err(Error::BadMagic { expected: "SEQF" });
    }
    let mut r = Reader { bytes, pos: 4 };
    let version = r.u16("version")?;
    if version != SEQF_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let id_len = r.u16("id length")? as usize;
    let id = std::str::from_utf8(r.take(id_len, "id")?)
        .map_err(|e| Error::InvalidArgument(format!("id is not UTF-8: {e}")))?
        .to_string();
    let t = r.u32("T")? as usize;
    let c = r.u32("c")? as usize;
    let count = t
        .checked_mul(c)
        .filter(|n| n.checked_mul(4).is_some())
        .ok_or_else(|| Error::DimensionOverflow(format!("T·c = {t}·{c}")))?;
    let payload = r.take(count * 4, "payload")?;
    if r.pos != bytes.len() {
        return Err(Error::InvalidArgument(format!(
            "{} trailing bytes after payload",
            bytes.len() - r.pos
        )));
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let data = Array2::from_shape_vec((t, c), values)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    FeatureSequence::new(id, data)
}

pub fn save_seqf(seq: &FeatureSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_seqf(seq)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_seqf(path: impl AsRef<Path>) -> Result<FeatureSequence> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_seqf(&bytes)
}
