//! Ptychographic simulation and Bayesian inversion.
//!
//! The crate covers the far-field observation model with Poisson counting
//! ([`physics`]), a compact feed-forward generator with exact vector-Jacobian
//! products ([`generator`]), unadjusted Langevin sampling in the generator's
//! latent space ([`inference`]), the rPIE baseline ([`rpie`]), and the
//! phantom/metric/benchmark harness ([`experiment`]). Binary file formats
//! live in [`io`].

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod field;
pub mod generator;
pub mod inference;
pub mod io;
pub mod physics;
pub mod rng;
pub mod rpie;

pub use error::{Error, Result};
pub use field::{ComplexField, RealImage};
