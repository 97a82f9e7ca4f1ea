//! Detector frame stacks and the end-to-end simulation of the observation model.

use std::borrow::Cow;

use rayon::prelude::*;

use super::operators::{check_geometry, forward_exit, intensity, Probe};
use super::poisson::sample_poisson;
use super::scan::ScanPlan;
use crate::error::{geometry, Error, Result};
use crate::field::ComplexField;
use crate::rng::stream_rng;

/// Read access to per-position detector frames, integer or expected-valued.
pub trait FrameSource: Sync {
    fn n_frames(&self) -> usize;
    fn patch_side(&self) -> usize;
    fn plan_digest(&self) -> u64;
    fn frame(&self, j: usize) -> Cow<'_, [f64]>;

    /// Frames must belong to `plan`; checked by digest and count.
    fn check_plan(&self, plan: &ScanPlan) -> Result<()> {
        if self.n_frames() != plan.len() || self.patch_side() != plan.patch_size() {
            return Err(geometry(format!(
                "{} frames of side {} for a plan of {} positions with patch side {}",
                self.n_frames(),
                self.patch_side(),
                plan.len(),
                plan.patch_size()
            )));
        }
        if self.plan_digest() != plan.digest() {
            return Err(Error::DataPlanMismatch(format!(
                "frames carry digest {:016x}, plan digest is {:016x}",
                self.plan_digest(),
                plan.digest()
            )));
        }
        Ok(())
    }
}

/// Photon counts, one `patch_side²` frame per scan position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffractionStack {
    patch_side: usize,
    frames: Vec<Vec<u32>>,
    plan_digest: u64,
}

impl DiffractionStack {
    pub fn new(plan: &ScanPlan, frames: Vec<Vec<u32>>) -> Result<Self> {
        let m2 = plan.patch_size() * plan.patch_size();
        if frames.len() != plan.len() {
            return Err(geometry(format!(
                "{} frames for {} scan positions",
                frames.len(),
                plan.len()
            )));
        }
        if let Some(j) = frames.iter().position(|f| f.len() != m2) {
            return Err(geometry(format!("frame {j} does not have {m2} pixels")));
        }
        Ok(DiffractionStack {
            patch_side: plan.patch_size(),
            frames,
            plan_digest: plan.digest(),
        })
    }

    pub fn frames(&self) -> &[Vec<u32>] {
        &self.frames
    }

    pub fn total_counts(&self) -> u64 {
        self.frames.iter().flatten().map(|&k| k as u64).sum()
    }
}

impl FrameSource for DiffractionStack {
    fn n_frames(&self) -> usize {
        self.frames.len()
    }

    fn patch_side(&self) -> usize {
        self.patch_side
    }

    fn plan_digest(&self) -> u64 {
        self.plan_digest
    }

    fn frame(&self, j: usize) -> Cow<'_, [f64]> {
        Cow::Owned(self.frames[j].iter().map(|&k| k as f64).collect())
    }
}

/// Noise-free expected intensities `|A_j u|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityStack {
    patch_side: usize,
    frames: Vec<Vec<f64>>,
    plan_digest: u64,
}

impl IntensityStack {
    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }
}

impl FrameSource for IntensityStack {
    fn n_frames(&self) -> usize {
        self.frames.len()
    }

    fn patch_side(&self) -> usize {
        self.patch_side
    }

    fn plan_digest(&self) -> u64 {
        self.plan_digest
    }

    fn frame(&self, j: usize) -> Cow<'_, [f64]> {
        Cow::Borrowed(&self.frames[j])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NoiseMode {
    #[default]
    Poisson,
    /// Counts are the expected intensities rounded to the nearest integer.
    Off,
}

pub fn expected_intensities(
    object: &ComplexField,
    probe: &Probe,
    plan: &ScanPlan,
) -> Result<IntensityStack> {
    check_geometry(object, probe, plan)?;
    let frames = (0..plan.len())
        .into_par_iter()
        .map(|j| forward_exit(object, probe, plan, j).map(|e| intensity(&e).into_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok(IntensityStack {
        patch_side: plan.patch_size(),
        frames,
        plan_digest: plan.digest(),
    })
}

/// Simulates one detector frame per scan position. Position `j` draws from
/// sub-stream `j` of `seed`, so the result does not depend on scheduling.
pub fn simulate_dataset(
    object: &ComplexField,
    probe: &Probe,
    plan: &ScanPlan,
    seed: u64,
    mode: NoiseMode,
) -> Result<DiffractionStack> {
    let expected = expected_intensities(object, probe, plan)?;
    let side = plan.patch_size();
    let frames = expected
        .frames
        .par_iter()
        .enumerate()
        .map(|(j, rates)| match mode {
            NoiseMode::Off => Ok(rates
                .iter()
                .map(|&r| r.round().min(u32::MAX as f64) as u32)
                .collect()),
            NoiseMode::Poisson => {
                let image = crate::field::RealImage::from_vec(side, side, rates.clone())?;
                let mut rng = stream_rng(seed, j as u64);
                sample_poisson(&image, &mut rng)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    DiffractionStack::new(plan, frames)
}
