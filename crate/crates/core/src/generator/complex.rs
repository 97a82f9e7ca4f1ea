//! Complex generator `G(z) = m ⊙ exp(i·φ)` built from two evaluations of the
//! real generator: `m = G₀(z_mag)`, `φ = G₀(z_phase)` in radians.

use num_complex::Complex64;

use super::model::{GeneratorModel, Trace};
use crate::error::{geometry, Error, Result};
use crate::field::ComplexField;

/// Latent `z = [z_mag; z_phase]`, length `2Z`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentVector(Vec<f64>);

impl LatentVector {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.is_empty() || !z.len().is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("latent length {} is not 2Z", z.len())));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("latent has non-finite entries".into()));
        }
        Ok(LatentVector(z))
    }

    pub fn zeros(latent_dim: usize) -> Self {
        LatentVector(vec![0.0; 2 * latent_dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn magnitude_block(&self) -> &[f64] {
        &self.0[..self.0.len() / 2]
    }

    pub fn phase_block(&self) -> &[f64] {
        &self.0[self.0.len() / 2..]
    }
}

/// Both head traces and the composed object of one complex forward pass.
#[derive(Clone, Debug)]
pub struct ComplexTrace {
    magnitude: Trace,
    phase: Trace,
    object: ComplexField,
}

impl ComplexTrace {
    pub fn object(&self) -> &ComplexField {
        &self.object
    }

    pub fn into_object(self) -> ComplexField {
        self.object
    }
}

fn split<'a>(model: &GeneratorModel, z: &'a [f64]) -> Result<(&'a [f64], &'a [f64])> {
    let d = model.latent_dim();
    if z.len() != 2 * d {
        return Err(geometry(format!(
            "complex latent of length {} for Z = {d} (expected {})",
            z.len(),
            2 * d
        )));
    }
    Ok(z.split_at(d))
}

pub fn trace_complex(model: &GeneratorModel, z: &[f64]) -> Result<ComplexTrace> {
    let (zm, zp) = split(model, z)?;
    let magnitude = model.trace(zm)?;
    let phase = model.trace(zp)?;
    let side = model.output_side();
    let data = magnitude
        .output()
        .iter()
        .zip(phase.output())
        .map(|(&m, &p)| Complex64::from_polar(m, p))
        .collect();
    let object = ComplexField::from_vec(side, side, data)?;
    Ok(ComplexTrace {
        magnitude,
        phase,
        object,
    })
}

pub fn generate_complex(model: &GeneratorModel, z: &LatentVector) -> Result<ComplexField> {
    trace_complex(model, z.as_slice()).map(ComplexTrace::into_object)
}

/// `2·Re{J_G(z)ᴴ · cotangent}`, length `2Z` (factor 2 included).
pub fn pullback_complex(
    model: &GeneratorModel,
    trace: &ComplexTrace,
    cotangent: &ComplexField,
) -> Result<Vec<f64>> {
    if cotangent.shape() != trace.object.shape() {
        return Err(geometry(format!(
            "cotangent is {}x{}, generator output is {}x{}",
            cotangent.height(),
            cotangent.width(),
            trace.object.height(),
            trace.object.width()
        )));
    }
    let n = trace.object.len();
    let mut mag_cot = Vec::with_capacity(n);
    let mut phase_cot = Vec::with_capacity(n);
    for ((&u, &c), &phi) in trace
        .object
        .as_slice()
        .iter()
        .zip(cotangent.as_slice())
        .zip(trace.phase.output())
    {
        // ∂u/∂m = e^{iφ}, ∂u/∂φ = i·u
        let unit = Complex64::from_polar(1.0, phi);
        mag_cot.push(2.0 * (unit.conj() * c).re);
        phase_cot.push(2.0 * ((Complex64::i() * u).conj() * c).re);
    }
    let mut grad = model.pullback(&trace.magnitude, &mag_cot)?;
    grad.extend(model.pullback(&trace.phase, &phase_cot)?);
    Ok(grad)
}

pub fn vjp_complex(model: &GeneratorModel, z: &LatentVector, cotangent: &ComplexField) -> Result<Vec<f64>> {
    let trace = trace_complex(model, z.as_slice())?;
    pullback_complex(model, &trace, cotangent)
}
