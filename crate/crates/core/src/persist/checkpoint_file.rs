//! Binary checkpoint layout (all integers little-endian):
//!
//! ```text
//! "MEMT"            4 bytes magic
//! version           u16 (currently 1)
//! descriptor        u32 length + UTF-8 architecture text
//! tensor count      u32
//! per tensor        u8 rank, rank × u32 dims, f64 payload
//! provenance        u32 length + UTF-8 `key=value` lines
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::PersistError;
use crate::nn::Tensor;
use crate::protocol::Checkpoint;

pub const MAGIC: &[u8; 4] = b"MEMT";
pub const VERSION: u16 = 1;

pub fn encode_checkpoint(c: &Checkpoint) -> Result<Vec<u8>, PersistError> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    put_text(&mut out, &c.descriptor());
    out.extend_from_slice(&(c.params.len() as u32).to_le_bytes());
    for (i, t) in c.params.iter().enumerate() {
        if !t.is_finite() {
            return Err(PersistError::NonFinite(format!("checkpoint tensor {i}")));
        }
        let rank = u8::try_from(t.shape().len()).map_err(|_| PersistError::DimensionOverflow)?;
        out.push(rank);
        for &d in t.shape() {
            out.extend_from_slice(&u32::try_from(d).map_err(|_| PersistError::DimensionOverflow)?.to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut prov = String::new();
    for (k, v) in &c.provenance {
        if k.is_empty() || k.contains(['=', '\n']) || v.contains('\n') {
            return Err(PersistError::InvalidProvenance(k.clone()));
        }
        prov.push_str(&format!("{k}={v}\n"));
    }
    put_text(&mut out, &prov);
    Ok(out)
}

fn put_text(out: &mut Vec<u8>, text: &str) {
    out.extend_from_slice(&(text.len() as u32).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PersistError> {
        let end = self.pos.checked_add(n).ok_or(PersistError::DimensionOverflow)?;
        let slice = self.bytes.get(self.pos..end).ok_or(PersistError::Truncated { offset: self.pos, needed: n })?;
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, PersistError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, PersistError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, PersistError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn text(&mut self) -> Result<&'a str, PersistError> {
        let len = self.u32()? as usize;
        std::str::from_utf8(self.take(len)?).map_err(|_| PersistError::InvalidUtf8)
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint, PersistError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4).map_err(|_| PersistError::BadMagic)?;
    if magic != MAGIC {
        return Err(PersistError::BadMagic);
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(PersistError::UnsupportedVersion(version));
    }
    let (arch, num_classes) = Checkpoint::parse_descriptor(r.text()?).map_err(|e| PersistError::Descriptor(e.to_string()))?;
    let count = r.u32()? as usize;
    let mut params = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let rank = r.u8()? as usize;
        let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let len = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .and_then(|n| n.checked_mul(8))
            .ok_or(PersistError::DimensionOverflow)?;
        let payload = r.take(len)?;
        let data = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        params.push(Tensor::new(dims, data).map_err(|e| PersistError::Descriptor(e.to_string()))?);
    }
    let mut provenance = BTreeMap::new();
    for line in r.text()?.lines() {
        let (k, v) = line.split_once('=').ok_or_else(|| PersistError::InvalidProvenance(line.to_string()))?;
        provenance.insert(k.to_string(), v.to_string());
    }
    if r.pos != bytes.len() {
        return Err(PersistError::TrailingBytes(bytes.len() - r.pos));
    }
    let ckpt = Checkpoint { arch, num_classes, params, provenance };
    // shapes must match the descriptor
    ckpt.to_network().map_err(|e| PersistError::Descriptor(e.to_string()))?;
    Ok(ckpt)
}

pub fn save_checkpoint(c: &Checkpoint, path: impl AsRef<Path>) -> Result<(), PersistError> {
    let bytes = encode_checkpoint(c)?;
    fs::write(path.as_ref(), bytes).map_err(|e| PersistError::io(path.as_ref(), e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, PersistError> {
    let bytes = fs::read(path.as_ref()).map_err(|e| PersistError::io(path.as_ref(), e))?;
    decode_checkpoint(&bytes)
}
