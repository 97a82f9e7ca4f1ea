//! Unadjusted Langevin algorithm in latent space:
//! `z ← z + γ ∇log p(z | f) + √(2γ) ε`, `ε ~ N(0, I)`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{seeded_rng, EngineRng};

use super::likelihood::DEFAULT_INTENSITY_FLOOR;

#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    pub step_size: f64,
    pub n_iters: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub intensity_floor: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            step_size: 1e-5,
            n_iters: 1000,
            burn_in: 500,
            seed: 0,
            intensity_floor: DEFAULT_INTENSITY_FLOOR,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::InvalidConfig(format!("step size {} must be positive", self.step_size)));
        }
        if self.n_iters == 0 {
            return Err(Error::InvalidConfig("chain needs at least one iteration".into()));
        }
        if self.burn_in >= self.n_iters {
            return Err(Error::InvalidConfig(format!(
                "burn-in {} must be smaller than the iteration count {}",
                self.burn_in, self.n_iters
            )));
        }
        if !(self.intensity_floor > 0.0) {
            return Err(Error::InvalidConfig("intensity floor must be positive".into()));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.n_iters - self.burn_in
    }
}

/// Value reported for diagnostics plus the gradient of the log posterior density.
#[derive(Clone, Debug)]
pub struct TargetEval {
    pub log_likelihood: f64,
    pub gradient: Vec<f64>,
}

/// A differentiable log density over latents. The ptychographic posterior is
/// one implementation; analytic targets are used to verify the sampler.
pub trait LatentTarget: Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, z: &[f64]) -> Result<TargetEval>;
}

/// Independent `N(mean_k, 1)` coordinates.
#[derive(Clone, Debug)]
pub struct GaussianTarget {
    pub mean: Vec<f64>,
}

impl GaussianTarget {
    pub fn standard(dim: usize) -> Self {
        GaussianTarget { mean: vec![0.0; dim] }
    }
}

impl LatentTarget for GaussianTarget {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn evaluate(&self, z: &[f64]) -> Result<TargetEval> {
        let gradient: Vec<f64> = z.iter().zip(&self.mean).map(|(v, m)| m - v).collect();
        let log_likelihood = -0.5 * gradient.iter().map(|d| d * d).sum::<f64>();
        Ok(TargetEval {
            log_likelihood,
            gradient,
        })
    }
}

/// `z + γ·g + √(2γ)·ε` for a given perturbation.
pub fn ula_update(z: &[f64], gradient: &[f64], step_size: f64, noise: &[f64]) -> Vec<f64> {
    let scale = (2.0 * step_size).sqrt();
    z.iter()
        .zip(gradient)
        .zip(noise)
        .map(|((v, g), e)| v + step_size * g + scale * e)
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// One Langevin transition. Returns the new latent and the evaluation at `z`.
pub fn ula_step<T: LatentTarget + ?Sized, R: Rng + ?Sized>(
    target: &T,
    z: &[f64],
    step_size: f64,
    rng: &mut R,
    iteration: usize,
) -> Result<(Vec<f64>, TargetEval)> {
    let eval = target.evaluate(z)?;
    if eval.gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::Diverged {
            iteration,
            reason: format!("non-finite gradient (|z| = {:.3e})", norm(z)),
        });
    }
    let noise: Vec<f64> = (0..z.len()).map(|_| rng.sample(StandardNormal)).collect();
    let next = ula_update(z, &eval.gradient, step_size, &noise);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged {
            iteration,
            reason: "latent left the finite range".into(),
        });
    }
    Ok((next, eval))
}

/// Per-iteration diagnostics of a chain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChainTrace {
    pub log_likelihood: Vec<f64>,
    pub grad_norm: Vec<f64>,
    pub final_latent: Vec<f64>,
}

impl ChainTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,log_likelihood,grad_norm\n");
        for (k, (ll, g)) in self.log_likelihood.iter().zip(&self.grad_norm).enumerate() {
            out.push_str(&format!("{},{:.17e},{:.17e}\n", k + 1, ll, g));
        }
        out
    }
}

/// Runs `cfg.n_iters` transitions from `z0`. Iterates `z^(k)` with
/// `k > burn_in` are handed to `observe`; there is no thinning.
pub fn run_latent_chain<T, O>(target: &T, z0: &[f64], cfg: &ChainConfig, mut observe: O) -> Result<ChainTrace>
where
    T: LatentTarget + ?Sized,
    O: FnMut(usize, &[f64]) -> Result<()>,
{
    cfg.validate()?;
    if z0.len() != target.dim() {
        return Err(Error::GeometryMismatch(format!(
            "initial latent has length {}, target dimension is {}",
            z0.len(),
            target.dim()
        )));
    }
    let mut rng: EngineRng = seeded_rng(cfg.seed);
    let mut z = z0.to_vec();
    let mut trace = ChainTrace {
        log_likelihood: Vec::with_capacity(cfg.n_iters),
        grad_norm: Vec::with_capacity(cfg.n_iters),
        final_latent: Vec::new(),
    };
    for k in 1..=cfg.n_iters {
        let (next, eval) = ula_step(target, &z, cfg.step_size, &mut rng, k)?;
        trace.log_likelihood.push(eval.log_likelihood);
        trace.grad_norm.push(norm(&eval.gradient));
        z = next;
        if k > cfg.burn_in {
            observe(k, &z)?;
        }
    }
    trace.final_latent = z;
    Ok(trace)
}
