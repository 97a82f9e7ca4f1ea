//! Poisson log-likelihood of detector frames given a latent, and its gradient
//! pulled back through the measurement operator and the generator.

use num_complex::Complex64;
use rayon::prelude::*;

use super::langevin::{LatentTarget, TargetEval};
use crate::error::{geometry, Result};
use crate::field::ComplexField;
use crate::generator::{pullback_complex, trace_complex, GeneratorModel, LatentVector};
use crate::physics::{accumulate_patch, adjoint_exit_patch, check_probe, forward_exit, FrameSource, Probe, ScanPlan};

pub const DEFAULT_INTENSITY_FLOOR: f64 = 1e-12;

/// Everything needed to score a latent against measured frames.
///
/// The reported log-likelihood omits the `−Σ log f!` constant, so values are
/// comparable only between evaluations on the same data.
pub struct PtychoProblem<'a, F: FrameSource> {
    pub data: &'a F,
    pub probe: &'a Probe,
    pub plan: &'a ScanPlan,
    pub model: &'a GeneratorModel,
    pub intensity_floor: f64,
}

impl<F: FrameSource> Clone for PtychoProblem<'_, F> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<F: FrameSource> Copy for PtychoProblem<'_, F> {}

/// Log-likelihood and its latent gradient (likelihood term only).
#[derive(Clone, Debug)]
pub struct LikelihoodEval {
    pub log_likelihood: f64,
    pub gradient: Vec<f64>,
    pub object: ComplexField,
}

impl<'a, F: FrameSource> PtychoProblem<'a, F> {
    pub fn new(data: &'a F, probe: &'a Probe, plan: &'a ScanPlan, model: &'a GeneratorModel) -> Result<Self> {
        data.check_plan(plan)?;
        check_probe(probe, plan)?;
        if model.output_side() != plan.object_size() {
            return Err(geometry(format!(
                "generator emits {0}x{0} objects, plan expects {1}x{1}",
                model.output_side(),
                plan.object_size()
            )));
        }
        Ok(PtychoProblem {
            data,
            probe,
            plan,
            model,
            intensity_floor: DEFAULT_INTENSITY_FLOOR,
        })
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.intensity_floor = floor;
        self
    }

    pub fn latent_dim(&self) -> usize {
        2 * self.model.latent_dim()
    }

    /// Per-position log-likelihood and residual `A_jᴴ r_j` patch, with
    /// `r_j = A_j u ⊙ (f_j ⊘ max(|A_j u|², floor) − 1)`.
    fn position_terms(&self, object: &ComplexField) -> Result<Vec<(f64, ComplexField)>> {
        let floor = self.intensity_floor;
        (0..self.plan.len())
            .into_par_iter()
            .map(|j| {
                let mut exit = forward_exit(object, self.probe, self.plan, j)?;
                let frame = self.data.frame(j);
                let mut ll = 0.0;
                for (psi, &f) in exit.as_mut_slice().iter_mut().zip(frame.iter()) {
                    let lambda = psi.norm_sqr().max(floor);
                    ll += f * lambda.ln() - lambda;
                    *psi *= f / lambda - 1.0;
                }
                let back = adjoint_exit_patch(&exit, self.probe, self.plan)?;
                Ok((ll, back))
            })
            .collect()
    }

    pub fn log_likelihood_of_object(&self, object: &ComplexField) -> Result<f64> {
        let floor = self.intensity_floor;
        let terms = (0..self.plan.len())
            .into_par_iter()
            .map(|j| {
                let exit = forward_exit(object, self.probe, self.plan, j)?;
                let frame = self.data.frame(j);
                Ok(exit
                    .as_slice()
                    .iter()
                    .zip(frame.iter())
                    .map(|(psi, &f)| {
                        let lambda = psi.norm_sqr().max(floor);
                        f * lambda.ln() - lambda
                    })
                    .sum::<f64>())
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(terms.iter().sum())
    }

    pub fn log_likelihood(&self, z: &LatentVector) -> Result<f64> {
        let trace = trace_complex(self.model, z.as_slice())?;
        self.log_likelihood_of_object(trace.object())
    }

    pub fn evaluate(&self, z: &[f64]) -> Result<LikelihoodEval> {
        let trace = trace_complex(self.model, z)?;
        let terms = self.position_terms(trace.object())?;
        let n = self.plan.object_size();
        let mut cotangent = ComplexField::filled(n, n, Complex64::new(0.0, 0.0));
        let mut log_likelihood = 0.0;
        // fixed-order reduction keeps results bit-reproducible
        for (j, (ll, patch)) in terms.iter().enumerate() {
            log_likelihood += ll;
            accumulate_patch(&mut cotangent, patch, self.plan, j)?;
        }
        let gradient = pullback_complex(self.model, &trace, &cotangent)?;
        Ok(LikelihoodEval {
            log_likelihood,
            gradient,
            object: trace.into_object(),
        })
    }

    pub fn grad_log_likelihood(&self, z: &LatentVector) -> Result<Vec<f64>> {
        self.evaluate(z.as_slice()).map(|e| e.gradient)
    }
}

/// Standard-normal latent prior: `∇ log p(z) = −z`.
pub fn grad_log_prior(z: &[f64]) -> Vec<f64> {
    z.iter().map(|v| -v).collect()
}

impl<F: FrameSource> LatentTarget for PtychoProblem<'_, F> {
    fn dim(&self) -> usize {
        self.latent_dim()
    }

    fn evaluate(&self, z: &[f64]) -> Result<TargetEval> {
        let eval = PtychoProblem::evaluate(self, z)?;
        let gradient = eval
            .gradient
            .iter()
            .zip(grad_log_prior(z))
            .map(|(l, p)| l + p)
            .collect();
        Ok(TargetEval {
            log_likelihood: eval.log_likelihood,
            gradient,
        })
    }
}

pub fn log_likelihood<F: FrameSource>(
    z: &LatentVector,
    data: &F,
    probe: &Probe,
    plan: &ScanPlan,
    model: &GeneratorModel,
    intensity_floor: f64,
) -> Result<f64> {
    PtychoProblem::new(data, probe, plan, model)?
        .with_floor(intensity_floor)
        .log_likelihood(z)
}

pub fn grad_log_likelihood<F: FrameSource>(
    z: &LatentVector,
    data: &F,
    probe: &Probe,
    plan: &ScanPlan,
    model: &GeneratorModel,
    intensity_floor: f64,
) -> Result<Vec<f64>> {
    PtychoProblem::new(data, probe, plan, model)?
        .with_floor(intensity_floor)
        .grad_log_likelihood(z)
}
