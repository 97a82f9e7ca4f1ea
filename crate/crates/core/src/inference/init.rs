//! Free-space latent initialization: gradient descent on `‖G(z) − 1‖²` from `z = 0`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::generator::{pullback_complex, trace_complex, GeneratorModel, LatentVector};

#[derive(Clone, Debug, PartialEq)]
pub struct InitConfig {
    pub iterations: usize,
    pub step: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            iterations: 500,
            step: 1e-2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct InitResult {
    pub latent: LatentVector,
    pub objective: f64,
    /// Objective after each iteration, starting with the value at `z = 0`.
    pub history: Vec<f64>,
}

fn objective_and_gradient(model: &GeneratorModel, z: &[f64], want_grad: bool) -> Result<(f64, Vec<f64>)> {
    let trace = trace_complex(model, z)?;
    let one = Complex64::new(1.0, 0.0);
    let residual: Vec<Complex64> = trace.object().as_slice().iter().map(|&u| u - one).collect();
    let value: f64 = residual.iter().map(|r| r.norm_sqr()).sum();
    if !want_grad {
        return Ok((value, Vec::new()));
    }
    let side = model.output_side();
    let cot = ComplexField::from_vec(side, side, residual)?;
    // pullback_complex supplies 2·Re{Jᴴ ·}, which is exactly ∇‖G(z) − 1‖²
    Ok((value, pullback_complex(model, &trace, &cot)?))
}

/// Fixed-step descent. A step that would raise the objective is rejected and
/// the step size is halved for the remaining iterations, so the recorded
/// history is non-increasing.
pub fn init_latent(model: &GeneratorModel, cfg: &InitConfig) -> Result<InitResult> {
    if !(cfg.step > 0.0) {
        return Err(Error::InvalidConfig("initialization step must be positive".into()));
    }
    let mut z = vec![0.0; 2 * model.latent_dim()];
    let (mut value, mut grad) = objective_and_gradient(model, &z, true)?;
    if !value.is_finite() {
        return Err(Error::Diverged {
            iteration: 0,
            reason: "non-finite free-space objective".into(),
        });
    }
    let mut step = cfg.step;
    let mut history = Vec::with_capacity(cfg.iterations + 1);
    history.push(value);
    for it in 1..=cfg.iterations {
        let trial: Vec<f64> = z.iter().zip(&grad).map(|(v, g)| v - step * g).collect();
        let (trial_value, _) = objective_and_gradient(model, &trial, false)?;
        if !trial_value.is_finite() {
            return Err(Error::Diverged {
                iteration: it,
                reason: "non-finite free-space objective".into(),
            });
        }
        if trial_value <= value {
            z = trial;
            let (v, g) = objective_and_gradient(model, &z, true)?;
            value = v;
            grad = g;
        } else {
            step *= 0.5;
        }
        history.push(value);
    }
    Ok(InitResult {
        latent: LatentVector::new(z)?,
        objective: value,
        history,
    })
}
