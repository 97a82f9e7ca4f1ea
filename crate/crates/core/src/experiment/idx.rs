//! IDX image files (the MNIST layout): big-endian magic `0x00000803`, then
//! count, rows and columns, then raw `u8` pixels.

use std::path::Path;

use super::phantom::GrayImage;
use crate::error::{Error, Result};
use crate::io::bytes::ByteReader;

const IMAGE_MAGIC: u32 = 0x0000_0803;

pub fn decode_idx(bytes: &[u8]) -> Result<Vec<GrayImage>> {
    let mut r = ByteReader::new(bytes, "IDX");
    let magic = r
        .u32_be()
        .map_err(|_| Error::UnsupportedFormat("IDX: file too short for a magic number".into()))?;
    if magic != IMAGE_MAGIC {
        return Err(Error::UnsupportedFormat(format!(
            "IDX: magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}"
        )));
    }
    let n = r.u32_be()? as usize;
    let rows = r.u32_be()? as usize;
    let cols = r.u32_be()? as usize;
    let size = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::CorruptFile("IDX: image size overflows".into()))?;
    let mut out = Vec::with_capacity(n.min(r.remaining() / size.max(1)));
    for _ in 0..n {
        out.push(GrayImage::new(rows, cols, r.take(size)?.to_vec())?);
    }
    r.finish()?;
    Ok(out)
}

pub fn ingest_idx(path: impl AsRef<Path>) -> Result<Vec<GrayImage>> {
    decode_idx(&std::fs::read(path)?)
}
