//! Rectangular grids of complex and real samples stored row-major.

use num_complex::Complex64;

use crate::error::{geometry, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    height: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, Complex64::new(0.0, 0.0))
    }

    pub fn filled(height: usize, width: usize, value: Complex64) -> Self {
        ComplexField {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    /// Unit transmission, zero phase.
    pub fn free_space(side: usize) -> Self {
        Self::filled(side, side, Complex64::new(1.0, 0.0))
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(geometry(format!(
                "{} samples for a {height}x{width} field",
                data.len()
            )));
        }
        if let Some(p) = data.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample at index {p}")));
        }
        Ok(ComplexField {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        ComplexField {
            height,
            width,
            data,
        }
    }

    /// Builds `magnitude ⊙ exp(i·phase)` from two real images of equal shape.
    pub fn from_polar(magnitude: &RealImage, phase: &RealImage) -> Result<Self> {
        if magnitude.shape() != phase.shape() {
            return Err(geometry("magnitude and phase images differ in shape"));
        }
        let data = magnitude
            .as_slice()
            .iter()
            .zip(phase.as_slice())
            .map(|(&m, &p)| Complex64::from_polar(m, p))
            .collect();
        Ok(ComplexField {
            height: magnitude.height(),
            width: magnitude.width(),
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_square(&self) -> bool {
        self.height == self.width
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.width + col] = value;
    }

    /// Inner product `Σ conj(self) · other`.
    pub fn inner(&self, other: &ComplexField) -> Complex64 {
        debug_assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn magnitude(&self) -> RealImage {
        self.map_real(|c| c.norm())
    }

    /// Principal-value phase in (−π, π].
    pub fn phase(&self) -> RealImage {
        self.map_real(|c| c.arg())
    }

    pub fn map_real(&self, f: impl Fn(Complex64) -> f64) -> RealImage {
        RealImage {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&c| f(c)).collect(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> ComplexField {
        ComplexField {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&c| c * factor).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Real-valued image (intensities, magnitudes, phases, standard deviations).
#[derive(Clone, Debug, PartialEq)]
pub struct RealImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl RealImage {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        RealImage {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(geometry(format!(
                "{} samples for a {height}x{width} image",
                data.len()
            )));
        }
        Ok(RealImage {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        RealImage {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_length_and_finiteness() {
        assert!(ComplexField::from_vec(2, 2, vec![Complex64::new(0.0, 0.0); 3]).is_err());
        let mut data = vec![Complex64::new(1.0, 0.0); 4];
        data[2].im = f64::NAN;
        assert!(matches!(
            ComplexField::from_vec(2, 2, data),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn polar_round_trip() {
        let m = RealImage::from_fn(3, 3, |r, c| 0.1 + 0.1 * (r * 3 + c) as f64);
        let p = RealImage::from_fn(3, 3, |r, c| 0.05 * (r + c) as f64);
        let u = ComplexField::from_polar(&m, &p).unwrap();
        for (a, b) in u.magnitude().as_slice().iter().zip(m.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
        for (a, b) in u.phase().as_slice().iter().zip(p.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
