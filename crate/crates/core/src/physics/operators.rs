//! The measurement operator `A_j = F · diag(w) · S_j` and its adjoint.

use super::dft::Dft2;
use super::scan::ScanPlan;
use crate::error::{geometry, Error, Result};
use crate::field::{ComplexField, RealImage};

/// Known illumination. `amplitude` is recorded for bookkeeping only; it is
/// already baked into `field`.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    field: ComplexField,
    amplitude: f64,
}

impl Probe {
    pub fn new(field: ComplexField, amplitude: f64) -> Result<Self> {
        if !field.is_square() {
            return Err(geometry("probe must be square"));
        }
        if !field.all_finite() {
            return Err(Error::InvalidProbe("non-finite probe samples".into()));
        }
        Ok(Probe { field, amplitude })
    }

    pub fn field(&self) -> &ComplexField {
        &self.field
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn side(&self) -> usize {
        self.field.width()
    }

    pub fn max_intensity(&self) -> f64 {
        self.field
            .as_slice()
            .iter()
            .map(|c| c.norm_sqr())
            .fold(0.0, f64::max)
    }
}

fn check_object(object: &ComplexField, plan: &ScanPlan) -> Result<()> {
    let n = plan.object_size();
    if object.shape() != (n, n) {
        return Err(geometry(format!(
            "object is {}x{} but the plan expects {n}x{n}",
            object.height(),
            object.width()
        )));
    }
    Ok(())
}

fn check_patch(patch: &ComplexField, plan: &ScanPlan) -> Result<()> {
    let m = plan.patch_size();
    if patch.shape() != (m, m) {
        return Err(geometry(format!(
            "patch is {}x{} but the plan expects {m}x{m}",
            patch.height(),
            patch.width()
        )));
    }
    Ok(())
}

pub(crate) fn check_probe(probe: &Probe, plan: &ScanPlan) -> Result<()> {
    if probe.side() != plan.patch_size() {
        return Err(geometry(format!(
            "probe side {} differs from patch side {}",
            probe.side(),
            plan.patch_size()
        )));
    }
    Ok(())
}

/// Validates that object, probe and plan describe the same geometry.
pub fn check_geometry(object: &ComplexField, probe: &Probe, plan: &ScanPlan) -> Result<()> {
    check_object(object, plan)?;
    check_probe(probe, plan)
}

/// `S_j u`: the patch under anchor `j`.
pub fn extract_patch(object: &ComplexField, plan: &ScanPlan, j: usize) -> Result<ComplexField> {
    let (r0, c0) = plan.anchor(j)?;
    check_object(object, plan)?;
    let m = plan.patch_size();
    Ok(ComplexField::from_fn(m, m, |r, c| object.get(r0 + r, c0 + c)))
}

/// `S_jᵀ v`: an object-sized field that is zero outside patch `j`.
pub fn embed_patch_adjoint(patch: &ComplexField, plan: &ScanPlan, j: usize) -> Result<ComplexField> {
    let n = plan.object_size();
    let mut out = ComplexField::zeros(n, n);
    accumulate_patch(&mut out, patch, plan, j)?;
    Ok(out)
}

/// `target += S_jᵀ patch`.
pub fn accumulate_patch(
    target: &mut ComplexField,
    patch: &ComplexField,
    plan: &ScanPlan,
    j: usize,
) -> Result<()> {
    let (r0, c0) = plan.anchor(j)?;
    check_patch(patch, plan)?;
    check_object(target, plan)?;
    let m = plan.patch_size();
    let n = plan.object_size();
    let dst = target.as_mut_slice();
    for r in 0..m {
        let row = &mut dst[(r0 + r) * n + c0..(r0 + r) * n + c0 + m];
        for (d, s) in row.iter_mut().zip(&patch.as_slice()[r * m..(r + 1) * m]) {
            *d += s;
        }
    }
    Ok(())
}

/// Exit wave `ψ_j = w ⊙ S_j u` before propagation.
pub fn exit_wave(
    object: &ComplexField,
    probe: &Probe,
    plan: &ScanPlan,
    j: usize,
) -> Result<ComplexField> {
    check_probe(probe, plan)?;
    let mut patch = extract_patch(object, plan, j)?;
    for (p, w) in patch.as_mut_slice().iter_mut().zip(probe.field().as_slice()) {
        *p *= w;
    }
    Ok(patch)
}

/// `A_j u = F(w ⊙ S_j u)`.
pub fn forward_exit(
    object: &ComplexField,
    probe: &Probe,
    plan: &ScanPlan,
    j: usize,
) -> Result<ComplexField> {
    let mut psi = exit_wave(object, probe, plan, j)?;
    Dft2::for_side(plan.patch_size()).forward_in_place(psi.as_mut_slice());
    Ok(psi)
}

/// Patch-sized part of `A_jᴴ v`, i.e. `conj(w) ⊙ F⁻¹ v` before embedding.
pub(crate) fn adjoint_exit_patch(v: &ComplexField, probe: &Probe, plan: &ScanPlan) -> Result<ComplexField> {
    check_probe(probe, plan)?;
    check_patch(v, plan)?;
    let mut back = v.clone();
    Dft2::for_side(plan.patch_size()).inverse_in_place(back.as_mut_slice());
    for (b, w) in back.as_mut_slice().iter_mut().zip(probe.field().as_slice()) {
        *b *= w.conj();
    }
    Ok(back)
}

/// `A_jᴴ v = S_jᵀ (conj(w) ⊙ F⁻¹ v)`, object-sized.
pub fn adjoint_exit(
    v: &ComplexField,
    probe: &Probe,
    plan: &ScanPlan,
    j: usize,
) -> Result<ComplexField> {
    plan.anchor(j)?;
    let back = adjoint_exit_patch(v, probe, plan)?;
    embed_patch_adjoint(&back, plan, j)
}

pub fn intensity(exit: &ComplexField) -> RealImage {
    exit.map_real(|c| c.norm_sqr())
}
