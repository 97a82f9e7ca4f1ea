//! rPIE reconstruction with a known, fixed probe.
//!
//! Each position update projects the exit wave onto the measured modulus and
//! writes the correction back with the regularized denominator
//! `(1 − α)|P|² + α·max|P|²`.

use num_complex::Complex64;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::physics::{check_geometry, exit_wave, Dft2, FrameSource, Probe, ScanPlan};
use crate::rng::seeded_rng;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct RpieConfig {
    pub alpha: f64,
    pub n_epochs: usize,
    pub seed: u64,
    /// Starting object; free space when `None`.
    pub init_object: Option<ComplexField>,
}

impl Default for RpieConfig {
    fn default() -> Self {
        RpieConfig {
            alpha: DEFAULT_ALPHA,
            n_epochs: 300,
            seed: 0,
            init_object: None,
        }
    }
}

impl RpieConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!("rPIE alpha {} must lie in (0, 1]", self.alpha)));
        }
        if self.n_epochs == 0 {
            return Err(Error::InvalidConfig("rPIE needs at least one epoch".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RpieResult {
    pub object: ComplexField,
    /// `Σ_j ‖√f_j − |A_j O|‖²` after each epoch.
    pub misfit: Vec<f64>,
}

impl RpieResult {
    pub fn misfit_csv(&self) -> String {
        let mut out = String::from("epoch,misfit\n");
        for (e, m) in self.misfit.iter().enumerate() {
            out.push_str(&format!("{},{:.17e}\n", e + 1, m));
        }
        out
    }
}

fn check_probe_nonzero(probe: &Probe) -> Result<f64> {
    let max = probe.max_intensity();
    if !(max > 0.0) {
        return Err(Error::DegenerateProbe("probe is identically zero".into()));
    }
    Ok(max)
}

/// Modulus projection `Ψ' = √f ⊙ Ψ/|Ψ|`, with `Ψ' = √f` where `Ψ = 0`.
fn project_modulus(spectrum: &mut [Complex64], frame: &[f64]) {
    for (psi, &f) in spectrum.iter_mut().zip(frame) {
        let target = f.max(0.0).sqrt();
        let modulus = psi.norm();
        *psi = if modulus > 0.0 {
            *psi * (target / modulus)
        } else {
            Complex64::new(target, 0.0)
        };
    }
}

/// One rPIE update of `object` at position `j` against `frame` (expected or measured intensities).
pub fn rpie_position_update(
    object: &mut ComplexField,
    probe: &Probe,
    plan: &ScanPlan,
    j: usize,
    frame: &[f64],
    alpha: f64,
) -> Result<()> {
    let max_intensity = check_probe_nonzero(probe)?;
    let m = plan.patch_size();
    if frame.len() != m * m {
        return Err(Error::GeometryMismatch(format!(
            "frame has {} pixels, patch has {}",
            frame.len(),
            m * m
        )));
    }
    let psi = exit_wave(object, probe, plan, j)?;
    let dft = Dft2::for_side(m);
    let mut revised = psi.clone();
    dft.forward_in_place(revised.as_mut_slice());
    project_modulus(revised.as_mut_slice(), frame);
    dft.inverse_in_place(revised.as_mut_slice());

    let (r0, c0) = plan.anchor(j)?;
    let n = plan.object_size();
    let data = object.as_mut_slice();
    for (k, ((p, old), new)) in probe
        .field()
        .as_slice()
        .iter()
        .zip(psi.as_slice())
        .zip(revised.as_slice())
        .enumerate()
    {
        let denom = (1.0 - alpha) * p.norm_sqr() + alpha * max_intensity;
        let idx = (r0 + k / m) * n + c0 + k % m;
        data[idx] += p.conj() * (new - old) / denom;
    }
    Ok(())
}

/// Amplitude misfit `Σ_j ‖√f_j − |A_j O|‖²`.
pub fn data_misfit<F: FrameSource>(object: &ComplexField, probe: &Probe, plan: &ScanPlan, data: &F) -> Result<f64> {
    let dft = Dft2::for_side(plan.patch_size());
    let mut total = 0.0;
    for j in 0..plan.len() {
        let mut psi = exit_wave(object, probe, plan, j)?;
        dft.forward_in_place(psi.as_mut_slice());
        let frame = data.frame(j);
        total += psi
            .as_slice()
            .iter()
            .zip(frame.iter())
            .map(|(p, &f)| (f.max(0.0).sqrt() - p.norm()).powi(2))
            .sum::<f64>();
    }
    Ok(total)
}

/// Full reconstruction: every epoch visits all positions in a fresh seeded permutation.
pub fn run_rpie<F: FrameSource>(data: &F, probe: &Probe, plan: &ScanPlan, cfg: &RpieConfig) -> Result<RpieResult> {
    cfg.validate()?;
    check_probe_nonzero(probe)?;
    data.check_plan(plan)?;
    let mut object = cfg
        .init_object
        .clone()
        .unwrap_or_else(|| ComplexField::free_space(plan.object_size()));
    check_geometry(&object, probe, plan)?;
    let mut rng = seeded_rng(cfg.seed);
    let mut order: Vec<usize> = (0..plan.len()).collect();
    let mut misfit = Vec::with_capacity(cfg.n_epochs);
    for _ in 0..cfg.n_epochs {
        order.shuffle(&mut rng);
        for &j in &order {
            rpie_position_update(&mut object, probe, plan, j, &data.frame(j), cfg.alpha)?;
        }
        misfit.push(data_misfit(&object, probe, plan, data)?);
    }
    Ok(RpieResult { object, misfit })
}
