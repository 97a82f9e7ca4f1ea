use sha2::{Digest, Sha256};

use crate::error::{geometry, Error, Result};

/// Ordered top-left patch anchors on a square object. Positions are
/// zero-based: position `j` of a plan with `J` anchors satisfies `j < J`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanPlan {
    object_size: usize,
    patch_size: usize,
    anchors: Vec<(usize, usize)>,
}

impl ScanPlan {
    pub fn new(object_size: usize, patch_size: usize, anchors: Vec<(usize, usize)>) -> Result<Self> {
        if patch_size == 0 || patch_size > object_size {
            return Err(geometry(format!(
                "patch of side {patch_size} does not fit an object of side {object_size}"
            )));
        }
        if anchors.is_empty() {
            return Err(Error::InvalidInput("scan plan has no positions".into()));
        }
        let limit = object_size - patch_size;
        if let Some(&(r, c)) = anchors.iter().find(|&&(r, c)| r > limit || c > limit) {
            return Err(geometry(format!(
                "anchor ({r}, {c}) places the patch outside the {object_size}x{object_size} object"
            )));
        }
        Ok(ScanPlan {
            object_size,
            patch_size,
            anchors,
        })
    }

    pub fn object_size(&self) -> usize {
        self.object_size
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn anchors(&self) -> &[(usize, usize)] {
        &self.anchors
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn anchor(&self, j: usize) -> Result<(usize, usize)> {
        self.anchors
            .get(j)
            .copied()
            .ok_or(Error::InvalidScanIndex {
                index: j,
                len: self.anchors.len(),
            })
    }

    /// Checksum over the geometry and anchor list; binds detector frames to the plan
    /// that produced them.
    pub fn digest(&self) -> u64 {
        let mut h = Sha256::new();
        h.update((self.object_size as u32).to_le_bytes());
        h.update((self.patch_size as u32).to_le_bytes());
        h.update((self.anchors.len() as u32).to_le_bytes());
        for &(r, c) in &self.anchors {
            h.update((r as u32).to_le_bytes());
            h.update((c as u32).to_le_bytes());
        }
        let out = h.finalize();
        u64::from_le_bytes(out[..8].try_into().expect("sha256 output is 32 bytes"))
    }
}
