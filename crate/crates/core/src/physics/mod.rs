//! Forward model of far-field ptychography: patch extraction, probe
//! modulation, unitary propagation to the detector, and photon counting.

mod dataset;
mod dft;
mod operators;
mod poisson;
mod scan;

pub use dataset::{expected_intensities, simulate_dataset, DiffractionStack, FrameSource, IntensityStack, NoiseMode};
pub use dft::{dft2, idft2, Dft2};
pub use operators::{
    accumulate_patch, adjoint_exit, check_geometry, embed_patch_adjoint, exit_wave, extract_patch,
    forward_exit, intensity, Probe,
};
pub(crate) use operators::{adjoint_exit_patch, check_probe};
pub use poisson::{poisson_draw, sample_poisson};
pub use scan::ScanPlan;
