//! `PFT1` tensor container: magic, `u32` channels/height/width, then little-endian `f32` data.

use std::io::Write;

use crate::error::{Error, Result};
use crate::tensor::ImageTensor;

pub const MAGIC: &[u8; 4] = b"PFT1";
pub const HEADER_LEN: usize = 16;

pub fn encode_into(out: &mut Vec<u8>, t: &ImageTensor) {
    out.reserve(HEADER_LEN + 4 * t.len());
    out.extend_from_slice(MAGIC);
    for d in [t.channels(), t.height(), t.width()] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode(t: &ImageTensor) -> Vec<u8> {
    let mut out = Vec::new();
    encode_into(&mut out, t);
    out
}

pub fn write<W: Write>(w: &mut W, t: &ImageTensor) -> Result<()> {
    w.write_all(&encode(t))?;
    Ok(())
}

pub(crate) fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::format(bytes.len() as u64, "unexpected end of data"))
}

/// Dimensions stored in the header at `offset`.
pub fn peek_header(bytes: &[u8], offset: usize) -> Result<(usize, usize, usize)> {
    match bytes.get(offset..offset + 4) {
        Some(m) if m == MAGIC => {}
        Some(_) => return Err(Error::format(offset as u64, "bad magic, expected PFT1")),
        None => return Err(Error::format(bytes.len() as u64, "unexpected end of data")),
    }
    let c = read_u32(bytes, offset + 4)? as usize;
    let h = read_u32(bytes, offset + 8)? as usize;
    let w = read_u32(bytes, offset + 12)? as usize;
    Ok((c, h, w))
}

/// Decodes one record starting at `offset`; returns it with the offset just past it.
pub fn decode_at(bytes: &[u8], offset: usize) -> Result<(ImageTensor, usize)> {
    let (c, h, w) = peek_header(bytes, offset)?;
    if c == 0 || h == 0 || w == 0 {
        return Err(Error::format(offset as u64 + 4, format!("empty dimensions {c}x{h}x{w}")));
    }
    let n = c
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .ok_or_else(|| Error::format(offset as u64 + 4, "dimensions overflow"))?;
    let start = offset + HEADER_LEN;
    let end = start + 4 * n;
    if bytes.len() < end {
        return Err(Error::format(
            bytes.len() as u64,
            format!("payload truncated: need {} bytes, have {}", 4 * n, bytes.len() - start),
        ));
    }
    let data = bytes[start..end]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
        .collect();
    Ok((ImageTensor::from_vec(c, h, w, data)?, end))
}

/// Decodes a buffer holding exactly one record.
pub fn decode(bytes: &[u8]) -> Result<ImageTensor> {
    let (t, end) = decode_at(bytes, 0)?;
    if end != bytes.len() {
        return Err(Error::format(end as u64, "trailing bytes after payload"));
    }
    Ok(t)
}

/// Decodes a buffer of back-to-back records.
pub fn decode_all(bytes: &[u8]) -> Result<Vec<ImageTensor>> {
    let mut out = Vec::new();
    let mut at = 0;
    while at < bytes.len() {
        let (t, next) = decode_at(bytes, at)?;
        out.push(t);
        at = next;
    }
    Ok(out)
}
