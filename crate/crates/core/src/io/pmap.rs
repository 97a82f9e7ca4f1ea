//! `PMAP` real-valued maps: an 8-line text header followed by raw `f64` data.
//!
//! ```text
//! PMAP
//! field std
//! height 64
//! width 64
//! dtype f64
//! endianness little
//! channel phase
//! checksum sha256:<hex of the data bytes>
//! ```

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::RealImage;

#[derive(Clone, Debug, PartialEq)]
pub struct MapFile {
    pub field: String,
    pub channel: String,
    pub image: RealImage,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn check_label(label: &str) -> Result<()> {
    if label.is_empty() || label.chars().any(|c| c.is_whitespace()) {
        return Err(Error::InvalidInput(format!("map label {label:?} must be a single non-empty word")));
    }
    Ok(())
}

pub fn encode_pmap(map: &MapFile) -> Result<Vec<u8>> {
    check_label(&map.field)?;
    check_label(&map.channel)?;
    let data: Vec<u8> = map.image.as_slice().iter().flat_map(|v| v.to_le_bytes()).collect();
    let header = format!(
        "PMAP\nfield {}\nheight {}\nwidth {}\ndtype f64\nendianness little\nchannel {}\nchecksum sha256:{}\n",
        map.field,
        map.image.height(),
        map.image.width(),
        map.channel,
        hex(&Sha256::digest(&data))
    );
    let mut out = header.into_bytes();
    out.extend_from_slice(&data);
    Ok(out)
}

/// Splits off the next header line and returns the value after `key `.
fn header_value<'a>(rest: &mut &'a [u8], key: &str) -> Result<&'a str> {
    let nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::CorruptFile(format!("PMAP header truncated before {key}")))?;
    let line = std::str::from_utf8(&rest[..nl]).map_err(|_| Error::CorruptFile("PMAP header is not UTF-8".into()))?;
    *rest = &rest[nl + 1..];
    line.strip_prefix(key)
        .and_then(|v| v.strip_prefix(' '))
        .ok_or_else(|| Error::CorruptFile(format!("PMAP header line {line:?}, expected {key}")))
}

fn parse_dim(v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| Error::CorruptFile(format!("PMAP dimension {v:?} is not an integer")))
}

pub fn decode_pmap(bytes: &[u8]) -> Result<MapFile> {
    if !bytes.starts_with(b"PMAP\n") {
        return Err(Error::UnsupportedFormat("PMAP: bad magic".into()));
    }
    let mut rest = &bytes[5..];
    let field = header_value(&mut rest, "field")?.to_string();
    let height = parse_dim(header_value(&mut rest, "height")?)?;
    let width = parse_dim(header_value(&mut rest, "width")?)?;
    let dtype = header_value(&mut rest, "dtype")?;
    if dtype != "f64" {
        return Err(Error::UnsupportedFormat(format!("PMAP dtype {dtype}")));
    }
    let endianness = header_value(&mut rest, "endianness")?;
    if endianness != "little" {
        return Err(Error::UnsupportedFormat(format!("PMAP endianness {endianness}")));
    }
    let channel = header_value(&mut rest, "channel")?.to_string();
    let checksum = header_value(&mut rest, "checksum")?;
    let expected = height.checked_mul(width).and_then(|n| n.checked_mul(8));
    if expected != Some(rest.len()) {
        return Err(Error::CorruptFile(format!(
            "PMAP payload has {} bytes for a {height}x{width} map",
            rest.len()
        )));
    }
    if checksum != format!("sha256:{}", hex(&Sha256::digest(rest))) {
        return Err(Error::CorruptFile("PMAP checksum mismatch".into()));
    }
    let data = rest
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let image = RealImage::from_vec(height, width, data).map_err(|e| Error::CorruptFile(format!("PMAP: {e}")))?;
    Ok(MapFile { field, channel, image })
}

pub fn save_pmap(map: &MapFile, path: impl AsRef<Path>) -> Result<()> {
    super::write_file(path, &encode_pmap(map)?)
}

pub fn load_pmap(path: impl AsRef<Path>) -> Result<MapFile> {
    decode_pmap(&super::read_file(path)?)
}
