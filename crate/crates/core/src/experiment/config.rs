use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::physics::{Probe, ScanPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Seeds {
    pub data: u64,
    pub chain: u64,
    pub rpie: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Linear overlap as a fraction of the probe side.
    pub overlap_ratio: f64,
    pub probe_amplitude: f64,
    pub probe_radius: f64,
    /// Maximum absolute anchor perturbation in pixels.
    pub jitter: usize,
    pub object_side: usize,
    pub patch_side: usize,
    pub seeds: Seeds,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            overlap_ratio: 0.05,
            probe_amplitude: 100.0,
            probe_radius: 8.0,
            jitter: 1,
            object_side: 64,
            patch_side: 16,
            seeds: Seeds::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.overlap_ratio) {
            return Err(Error::InvalidOverlap(format!(
                "overlap ratio {} must lie in [0, 1)",
                self.overlap_ratio
            )));
        }
        if !(self.probe_amplitude > 0.0) || !self.probe_amplitude.is_finite() {
            return Err(Error::InvalidProbe(format!("amplitude {} must be positive", self.probe_amplitude)));
        }
        if self.patch_side == 0 || self.patch_side > self.object_side {
            return Err(Error::GeometryMismatch(format!(
                "patch side {} does not fit object side {}",
                self.patch_side, self.object_side
            )));
        }
        scan_step(self.overlap_ratio, self.patch_side)?;
        Ok(())
    }
}

/// Raster step `round((1 − o)·patch_side)`.
pub fn scan_step(overlap_ratio: f64, patch_side: usize) -> Result<usize> {
    let s = ((1.0 - overlap_ratio) * patch_side as f64).round();
    if !(s >= 1.0) {
        return Err(Error::InvalidOverlap(format!(
            "overlap {overlap_ratio} gives a scan step below one pixel"
        )));
    }
    Ok(s as usize)
}

/// Raster anchors at multiples of the step, each coordinate perturbed by a
/// uniform integer in `[−jitter, jitter]` and clamped into range.
pub fn make_scan_plan<R: Rng + ?Sized>(cfg: &ExperimentConfig, rng: &mut R) -> Result<ScanPlan> {
    cfg.validate()?;
    let s = scan_step(cfg.overlap_ratio, cfg.patch_side)?;
    let last = cfg.object_side - cfg.patch_side;
    let base: Vec<usize> = (0..=last).step_by(s).collect();
    let jitter = cfg.jitter as i64;
    let mut perturb = |v: usize| -> usize {
        if jitter == 0 {
            return v;
        }
        (v as i64 + rng.random_range(-jitter..=jitter)).clamp(0, last as i64) as usize
    };
    let mut anchors = Vec::with_capacity(base.len() * base.len());
    for &r in &base {
        for &c in &base {
            anchors.push((perturb(r), perturb(c)));
        }
    }
    ScanPlan::new(cfg.object_side, cfg.patch_side, anchors)
}

/// Flat-topped binary disk: `amplitude` where the pixel centre lies strictly
/// within `radius` of the grid centre `(side − 1)/2`, zero elsewhere.
pub fn make_disk_probe(side: usize, radius: f64, amplitude: f64) -> Result<Probe> {
    if !(amplitude > 0.0) || !amplitude.is_finite() {
        return Err(Error::InvalidProbe(format!("amplitude {amplitude} must be positive")));
    }
    if side == 0 || !(radius > 0.0) || radius > side as f64 / 2.0 {
        return Err(Error::InvalidProbe(format!("radius {radius} does not fit a {side}-pixel grid")));
    }
    let centre = (side as f64 - 1.0) / 2.0;
    let field = ComplexField::from_fn(side, side, |r, c| {
        let d = (r as f64 - centre).hypot(c as f64 - centre);
        if d < radius {
            Complex64::new(amplitude, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Probe::new(field, amplitude)
}
