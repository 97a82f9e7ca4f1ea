use num_complex::Complex64;

use super::langevin::{run_latent_chain, ChainConfig, ChainTrace, LatentTarget};
use crate::error::{geometry, Error, Result};
use crate::field::{ComplexField, RealImage};
use crate::generator::{generate_complex, GeneratorModel, LatentVector};

/// Post-burn-in object samples with their pixel-wise summaries.
///
/// The mean is taken in the complex domain. Standard deviations are
/// population deviations (divide by the sample count) of `|u|` and of the
/// principal-value `arg(u)`; phase wrap-around is not handled.
#[derive(Clone, Debug)]
pub struct PosteriorEnsemble {
    samples: Vec<ComplexField>,
    mean_object: ComplexField,
    std_magnitude: RealImage,
    std_phase: RealImage,
}

impl PosteriorEnsemble {
    pub fn from_samples(samples: Vec<ComplexField>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::InvalidInput("ensemble needs at least one sample".into()))?;
        let (h, w) = first.shape();
        if samples.iter().any(|s| s.shape() != (h, w)) {
            return Err(geometry("ensemble samples differ in shape"));
        }
        let n = samples.len() as f64;
        let npix = h * w;
        let mut mean = vec![Complex64::new(0.0, 0.0); npix];
        let mut mag_mean = vec![0.0; npix];
        let mut phase_mean = vec![0.0; npix];
        for s in &samples {
            for (p, &u) in s.as_slice().iter().enumerate() {
                mean[p] += u;
                mag_mean[p] += u.norm();
                phase_mean[p] += u.arg();
            }
        }
        for p in 0..npix {
            mean[p] /= n;
            mag_mean[p] /= n;
            phase_mean[p] /= n;
        }
        let mut mag_var = vec![0.0; npix];
        let mut phase_var = vec![0.0; npix];
        for s in &samples {
            for (p, &u) in s.as_slice().iter().enumerate() {
                mag_var[p] += (u.norm() - mag_mean[p]).powi(2);
                phase_var[p] += (u.arg() - phase_mean[p]).powi(2);
            }
        }
        let std_magnitude = RealImage::from_vec(h, w, mag_var.iter().map(|v| (v / n).sqrt()).collect())?;
        let std_phase = RealImage::from_vec(h, w, phase_var.iter().map(|v| (v / n).sqrt()).collect())?;
        Ok(PosteriorEnsemble {
            mean_object: ComplexField::from_vec(h, w, mean)?,
            samples,
            std_magnitude,
            std_phase,
        })
    }

    pub fn samples(&self) -> &[ComplexField] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_object(&self) -> &ComplexField {
        &self.mean_object
    }

    pub fn std_magnitude(&self) -> &RealImage {
        &self.std_magnitude
    }

    pub fn std_phase(&self) -> &RealImage {
        &self.std_phase
    }
}

/// Runs the Langevin chain against `target` and maps every post-burn-in
/// latent through the complex generator.
pub fn run_chain<T: LatentTarget + ?Sized>(
    target: &T,
    model: &GeneratorModel,
    z0: &LatentVector,
    cfg: &ChainConfig,
) -> Result<(PosteriorEnsemble, ChainTrace)> {
    let mut samples = Vec::with_capacity(cfg.n_samples());
    let trace = run_latent_chain(target, z0.as_slice(), cfg, |_, z| {
        samples.push(generate_complex(model, &LatentVector::new(z.to_vec())?)?);
        Ok(())
    })?;
    Ok((PosteriorEnsemble::from_samples(samples)?, trace))
}
