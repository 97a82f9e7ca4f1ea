//! `POBJ` complex objects and `PSMP` stacks of posterior samples.

use std::path::Path;

use num_complex::Complex64;

use super::bytes::{checked_u32, put_f64, put_u32, ByteReader};
use crate::error::{geometry, Error, Result};
use crate::field::ComplexField;

const OBJECT_MAGIC: &[u8; 4] = b"POBJ";
const SAMPLES_MAGIC: &[u8; 4] = b"PSMP";
const SAMPLES_VERSION: u32 = 1;

fn put_field(out: &mut Vec<u8>, field: &ComplexField) {
    for c in field.as_slice() {
        put_f64(out, c.re);
        put_f64(out, c.im);
    }
}

fn read_field(r: &mut ByteReader<'_>, side: usize) -> Result<ComplexField> {
    let raw = r.take(16usize.saturating_mul(side).saturating_mul(side))?;
    let data = raw
        .chunks_exact(16)
        .map(|b| {
            Complex64::new(
                f64::from_le_bytes(b[..8].try_into().unwrap()),
                f64::from_le_bytes(b[8..].try_into().unwrap()),
            )
        })
        .collect();
    ComplexField::from_vec(side, side, data).map_err(|e| Error::CorruptFile(e.to_string()))
}

fn require_square(field: &ComplexField) -> Result<usize> {
    if !field.is_square() {
        return Err(geometry("only square objects can be stored"));
    }
    checked_u32(field.width(), "object side")
}

pub fn encode_object(object: &ComplexField) -> Result<Vec<u8>> {
    let side = require_square(object)?;
    let mut out = Vec::with_capacity(8 + 16 * side * side);
    out.extend_from_slice(OBJECT_MAGIC);
    put_u32(&mut out, side);
    put_field(&mut out, object);
    Ok(out)
}

pub fn decode_object(bytes: &[u8]) -> Result<ComplexField> {
    let mut r = ByteReader::new(bytes, "POBJ");
    r.expect_magic(OBJECT_MAGIC)?;
    let side = r.len_u32()?;
    let field = read_field(&mut r, side)?;
    r.finish()?;
    Ok(field)
}

pub fn save_object(object: &ComplexField, path: impl AsRef<Path>) -> Result<()> {
    super::write_file(path, &encode_object(object)?)
}

pub fn load_object(path: impl AsRef<Path>) -> Result<ComplexField> {
    decode_object(&super::read_file(path)?)
}

pub fn encode_samples(samples: &[ComplexField]) -> Result<Vec<u8>> {
    let side = match samples.first() {
        Some(s) => require_square(s)?,
        None => 0,
    };
    if samples.iter().any(|s| s.shape() != (side, side)) {
        return Err(geometry("samples differ in shape"));
    }
    let mut out = Vec::with_capacity(16 + 16 * side * side * samples.len());
    out.extend_from_slice(SAMPLES_MAGIC);
    put_u32(&mut out, SAMPLES_VERSION as usize);
    put_u32(&mut out, checked_u32(samples.len(), "sample count")?);
    put_u32(&mut out, side);
    for s in samples {
        put_field(&mut out, s);
    }
    Ok(out)
}

pub fn decode_samples(bytes: &[u8]) -> Result<Vec<ComplexField>> {
    let mut r = ByteReader::new(bytes, "PSMP");
    r.expect_magic(SAMPLES_MAGIC)?;
    r.expect_version(SAMPLES_VERSION)?;
    let n = r.len_u32()?;
    let side = r.len_u32()?;
    let mut out = Vec::with_capacity(n.min(r.remaining() / 16 + 1));
    for _ in 0..n {
        out.push(read_field(&mut r, side)?);
    }
    r.finish()?;
    Ok(out)
}

pub fn save_samples(samples: &[ComplexField], path: impl AsRef<Path>) -> Result<()> {
    super::write_file(path, &encode_samples(samples)?)
}

pub fn load_samples(path: impl AsRef<Path>) -> Result<Vec<ComplexField>> {
    decode_samples(&super::read_file(path)?)
}
