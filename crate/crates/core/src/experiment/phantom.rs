use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{ComplexField, RealImage};
use crate::rng::seeded_rng;

/// Additive offset applied in the `[0, 1]` intensity domain before rescaling.
pub const PHANTOM_OFFSET: f64 = 0.2;

/// Raw 8-bit grayscale image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(Error::InvalidInput(format!(
                "{} pixels for a {height}x{width} image",
                pixels.len()
            )));
        }
        Ok(GrayImage { height, width, pixels })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn to_real(&self) -> RealImage {
        RealImage::from_fn(self.height, self.width, |r, c| self.pixels[r * self.width + c] as f64)
    }
}

/// Source coordinate under pixel-centre alignment, clamped to the grid.
fn source_coord(i: usize, from: usize, to: usize) -> (usize, usize, f64) {
    let x = ((i as f64 + 0.5) * from as f64 / to as f64 - 0.5).clamp(0.0, (from - 1) as f64);
    let lo = x.floor() as usize;
    let hi = (lo + 1).min(from - 1);
    (lo, hi, x - lo as f64)
}

/// Bilinear resampling with pixel centres aligned and edge samples replicated.
pub fn bilinear_resize(image: &RealImage, height: usize, width: usize) -> Result<RealImage> {
    if image.is_empty() || height == 0 || width == 0 {
        return Err(Error::InvalidInput("cannot resize an empty image".into()));
    }
    let cols: Vec<_> = (0..width).map(|c| source_coord(c, image.width(), width)).collect();
    Ok(RealImage::from_fn(height, width, |r, c| {
        let (r0, r1, fr) = source_coord(r, image.height(), height);
        let (c0, c1, fc) = cols[c];
        let top = image.get(r0, c0) * (1.0 - fc) + image.get(r0, c1) * fc;
        let bottom = image.get(r1, c0) * (1.0 - fc) + image.get(r1, c1) * fc;
        top * (1.0 - fr) + bottom * fr
    }))
}

/// `x ↦ (x/255 + 0.2)/1.2`, taking `[0, 255]` onto `[1/6, 1]`.
pub fn map_intensity(x: f64) -> f64 {
    (x / 255.0 + PHANTOM_OFFSET) / (1.0 + PHANTOM_OFFSET)
}

fn channel(image: &GrayImage, side: usize) -> Result<RealImage> {
    if image.pixels.is_empty() {
        return Err(Error::InvalidInput("empty phantom source image".into()));
    }
    if image.height != image.width {
        return Err(Error::InvalidInput(format!(
            "phantom source must be square, got {}x{}",
            image.height, image.width
        )));
    }
    let mut resized = bilinear_resize(&image.to_real(), side, side)?;
    resized.as_mut_slice().iter_mut().for_each(|v| *v = map_intensity(*v));
    Ok(resized)
}

/// Complex phantom `m·e^{iφ}` from one image for the magnitude and another
/// for the phase (in radians).
pub fn make_phantom(magnitude: &GrayImage, phase: &GrayImage, side: usize) -> Result<ComplexField> {
    ComplexField::from_polar(&channel(magnitude, side)?, &channel(phase, side)?)
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

/// Handwriting-like 28×28 stroke images for running the pipeline without an
/// IDX file: an anti-aliased polyline, sometimes closed by a loop.
pub fn synthetic_digits(count: usize, seed: u64) -> Vec<GrayImage> {
    const SIDE: usize = 28;
    let mut rng = seeded_rng(seed);
    (0..count)
        .map(|_| {
            let n_points = rng.random_range(3..=5);
            let mut points: Vec<(f64, f64)> = (0..n_points)
                .map(|_| (rng.random_range(5.0..22.0), rng.random_range(6.0..21.0)))
                .collect();
            if rng.random_bool(0.3) {
                points.push(points[0]);
            }
            let half_width = rng.random_range(1.0..2.2);
            let pixels = (0..SIDE * SIDE)
                .map(|k| {
                    let p = ((k / SIDE) as f64, (k % SIDE) as f64);
                    let d = points
                        .windows(2)
                        .map(|w| segment_distance(p, w[0], w[1]))
                        .fold(f64::INFINITY, f64::min);
                    (255.0 * (half_width + 0.5 - d).clamp(0.0, 1.0)).round() as u8
                })
                .collect();
            GrayImage {
                height: SIDE,
                width: SIDE,
                pixels,
            }
        })
        .collect()
}
