//! Poisson photon-count sampling.
//!
//! Small rates (λ < 10) use inversion by sequential search over the CDF. Larger
//! rates use Hörmann's transformed rejection with squeeze (PTRS), which needs
//! O(1) uniforms per draw and never forms `e^{-λ}`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::RealImage;

const INVERSION_LIMIT: f64 = 10.0;

/// One Poisson draw. `lambda` must be finite and nonnegative.
pub fn poisson_draw<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<u64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidRate(lambda));
    }
    if lambda == 0.0 {
        return Ok(0);
    }
    if lambda < INVERSION_LIMIT {
        Ok(inversion(lambda, rng))
    } else {
        Ok(ptrs(lambda, rng))
    }
}

fn inversion<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-lambda).exp();
    let mut cdf = p;
    // the tail past k = 200 has probability far below f64 resolution for λ < 10
    while u > cdf && k < 200 {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
    }
    k
}

fn ptrs<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -lambda + k * loglam - libm::lgamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// Independent draws per pixel, row-major, saturating at `u32::MAX`.
pub fn sample_poisson<R: Rng + ?Sized>(rates: &RealImage, rng: &mut R) -> Result<Vec<u32>> {
    if let Some(&bad) = rates.as_slice().iter().find(|&&r| !(r >= 0.0) || !r.is_finite()) {
        return Err(Error::InvalidRate(bad));
    }
    rates
        .as_slice()
        .iter()
        .map(|&lam| poisson_draw(lam, rng).map(|k| k.min(u32::MAX as u64) as u32))
        .collect()
}
