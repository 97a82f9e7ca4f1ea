//! Unitary two-dimensional DFT on square grids.
//!
//! Both directions carry a `1/side` factor (`1/√M` for an `M = side²` grid), so
//! the inverse transform is also the adjoint and Parseval holds exactly.
//! The zero frequency sits at index (0, 0); no shift is applied.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{geometry, Result};
use crate::field::ComplexField;

pub struct Dft2 {
    side: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Dft2 {
    pub fn new(side: usize) -> Self {
        let mut planner = FftPlanner::new();
        Dft2 {
            side,
            forward: planner.plan_fft_forward(side),
            inverse: planner.plan_fft_inverse(side),
        }
    }

    /// Shared plan for `side`, built once per process.
    pub fn for_side(side: usize) -> Arc<Dft2> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Dft2>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let mut guard = cache.lock().expect("dft cache poisoned");
        guard
            .entry(side)
            .or_insert_with(|| Arc::new(Dft2::new(side)))
            .clone()
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, &*self.forward);
    }

    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, &*self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], fft: &dyn Fft<f64>) {
        let n = self.side;
        assert_eq!(data.len(), n * n, "buffer does not match the planned side");
        // rows, then columns through a transpose
        fft.process(data);
        transpose_square(data, n);
        fft.process(data);
        transpose_square(data, n);
        let scale = 1.0 / n as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            data.swap(r * n + c, c * n + r);
        }
    }
}

fn check_square(field: &ComplexField) -> Result<()> {
    if !field.is_square() {
        return Err(geometry(format!(
            "DFT needs a square field, got {}x{}",
            field.height(),
            field.width()
        )));
    }
    Ok(())
}

pub fn dft2(field: &ComplexField) -> Result<ComplexField> {
    check_square(field)?;
    let mut out = field.clone();
    Dft2::for_side(field.width()).forward_in_place(out.as_mut_slice());
    Ok(out)
}

pub fn idft2(field: &ComplexField) -> Result<ComplexField> {
    check_square(field)?;
    let mut out = field.clone();
    Dft2::for_side(field.width()).inverse_in_place(out.as_mut_slice());
    Ok(out)
}
