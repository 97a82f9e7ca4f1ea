//! 8-bit binary PGM previews, linearly scaled from the image's own range.

use std::path::Path;

use crate::error::Result;
use crate::field::RealImage;

pub fn encode_pgm(image: &RealImage) -> Vec<u8> {
    let (lo, hi) = image.min_max();
    let span = hi - lo;
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.as_slice().iter().map(|&v| {
        if span > 0.0 {
            ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    out
}

pub fn save_pgm(image: &RealImage, path: impl AsRef<Path>) -> Result<()> {
    super::write_file(path, &encode_pgm(image))
}
