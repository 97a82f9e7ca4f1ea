//! On-disk formats. Binary layouts are little-endian throughout.

pub(crate) mod bytes;
mod pgm;
mod pmap;
mod pobj;
mod prbe;
mod ptyd;

pub use pgm::{encode_pgm, save_pgm};
pub use pmap::{decode_pmap, encode_pmap, load_pmap, save_pmap, MapFile};
pub use pobj::{
    decode_object, decode_samples, encode_object, encode_samples, load_object, load_samples, save_object,
    save_samples,
};
pub use prbe::{decode_probe, encode_probe, load_probe, save_probe};
pub use ptyd::{decode_dataset, encode_dataset, load_dataset, save_dataset};

use std::path::Path;

use crate::error::Result;

pub(crate) fn read_file(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    Ok(std::fs::read(path)?)
}

pub(crate) fn write_file(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    Ok(std::fs::write(path, bytes)?)
}
