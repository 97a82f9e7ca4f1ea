//! `PTYD` datasets: header, scan anchors, then `u32` counts frame by frame.

use std::path::Path;

use super::bytes::{checked_u32, put_u32, ByteReader};
use crate::error::{Error, Result};
use crate::physics::{DiffractionStack, FrameSource, ScanPlan};

const MAGIC: &[u8; 4] = b"PTYD";
const VERSION: u32 = 1;

pub fn encode_dataset(plan: &ScanPlan, data: &DiffractionStack) -> Result<Vec<u8>> {
    data.check_plan(plan)?;
    let m = plan.patch_size();
    let mut out = Vec::with_capacity(20 + 8 * plan.len() + 4 * plan.len() * m * m);
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION as usize);
    put_u32(&mut out, checked_u32(plan.len(), "position count")?);
    put_u32(&mut out, checked_u32(m, "patch side")?);
    put_u32(&mut out, checked_u32(plan.object_size(), "object side")?);
    for &(r, c) in plan.anchors() {
        put_u32(&mut out, r);
        put_u32(&mut out, c);
    }
    for frame in data.frames() {
        for &v in frame {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Decodes the dataset and rebuilds the plan it was recorded with.
pub fn decode_dataset(bytes: &[u8]) -> Result<(ScanPlan, DiffractionStack)> {
    let mut r = ByteReader::new(bytes, "PTYD");
    r.expect_magic(MAGIC)?;
    r.expect_version(VERSION)?;
    let j = r.len_u32()?;
    let m = r.len_u32()?;
    let n = r.len_u32()?;
    let mut anchors = Vec::with_capacity(j.min(r.remaining() / 8));
    for _ in 0..j {
        anchors.push((r.len_u32()?, r.len_u32()?));
    }
    let mut frames = Vec::with_capacity(j);
    for _ in 0..j {
        let raw = r.take(4 * m * m)?;
        frames.push(
            raw.chunks_exact(4)
                .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
                .collect(),
        );
    }
    r.finish()?;
    let plan = ScanPlan::new(n, m, anchors).map_err(|e| Error::CorruptFile(format!("PTYD scan plan: {e}")))?;
    let data = DiffractionStack::new(&plan, frames)?;
    Ok((plan, data))
}

pub fn save_dataset(plan: &ScanPlan, data: &DiffractionStack, path: impl AsRef<Path>) -> Result<()> {
    super::write_file(path, &encode_dataset(plan, data)?)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<(ScanPlan, DiffractionStack)> {
    decode_dataset(&super::read_file(path)?)
}
