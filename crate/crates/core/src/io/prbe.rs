//! `PRBE` probe files: side, amplitude, then interleaved `(re, im)` samples.

use std::path::Path;

use num_complex::Complex64;

use super::bytes::{checked_u32, put_f64, put_u32, ByteReader};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::physics::Probe;

const MAGIC: &[u8; 4] = b"PRBE";
const VERSION: u32 = 1;

pub fn encode_probe(probe: &Probe) -> Result<Vec<u8>> {
    let side = probe.side();
    let mut out = Vec::with_capacity(20 + 16 * side * side);
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION as usize);
    put_u32(&mut out, checked_u32(side, "probe side")?);
    put_f64(&mut out, probe.amplitude());
    for c in probe.field().as_slice() {
        put_f64(&mut out, c.re);
        put_f64(&mut out, c.im);
    }
    Ok(out)
}

pub fn decode_probe(bytes: &[u8]) -> Result<Probe> {
    let mut r = ByteReader::new(bytes, "PRBE");
    r.expect_magic(MAGIC)?;
    r.expect_version(VERSION)?;
    let side = r.len_u32()?;
    let amplitude = r.f64()?;
    let mut data = Vec::with_capacity(side * side);
    for _ in 0..side * side {
        let re = r.f64()?;
        let im = r.f64()?;
        data.push(Complex64::new(re, im));
    }
    r.finish()?;
    let field = ComplexField::from_vec(side, side, data).map_err(|e| Error::CorruptFile(format!("PRBE: {e}")))?;
    Probe::new(field, amplitude)
}

pub fn save_probe(probe: &Probe, path: impl AsRef<Path>) -> Result<()> {
    super::write_file(path, &encode_probe(probe)?)
}

pub fn load_probe(path: impl AsRef<Path>) -> Result<Probe> {
    decode_probe(&super::read_file(path)?)
}
