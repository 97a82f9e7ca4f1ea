//! Posterior sampling over the generator's latent space.
//!
//! [`PtychoProblem`] scores a latent against measured frames under the
//! Poisson model and pulls the score gradient back through the measurement
//! operator and the generator. [`run_chain`] drives the unadjusted Langevin
//! algorithm against any [`LatentTarget`] and summarizes the resulting
//! object samples in a [`PosteriorEnsemble`].

mod ensemble;
mod init;
mod langevin;
mod likelihood;

pub use ensemble::{run_chain, PosteriorEnsemble};
pub use init::{init_latent, InitConfig, InitResult};
pub use langevin::{
    run_latent_chain, ula_step, ula_update, ChainConfig, ChainTrace, GaussianTarget, LatentTarget, TargetEval,
};
pub use likelihood::{
    grad_log_likelihood, grad_log_prior, log_likelihood, LikelihoodEval, PtychoProblem, DEFAULT_INTENSITY_FLOOR,
};
