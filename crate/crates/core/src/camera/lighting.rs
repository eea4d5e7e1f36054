//! Brightness, low-light and contrast.
//!
//! Lightness is approximated by BT.601 luma; shifting luma by `d` adds `d` to
//! every channel, which leaves the chroma differences untouched.

use super::raster::{luma, FloatImage};
use super::{wrong_family, Image};
use crate::error::Result;
use crate::params::CameraParams;
use crate::rng::SeededRng;
use crate::seed::DerivedSeed;

pub fn apply_lighting(img: &Image, params: &CameraParams, seed: DerivedSeed) -> Result<Image> {
    match *params {
        CameraParams::Brightness { offset } => Ok(brightness(img, offset)),
        CameraParams::LowLight { scale, noise } => Ok(low_light(img, scale, noise, seed)),
        CameraParams::Contrast { factor } => Ok(contrast(img, factor)),
        _ => Err(wrong_family(params, "lighting")),
    }
}

/// Raise luma by `offset` (fraction of full scale), saturating at white.
pub fn brightness(img: &Image, offset: f64) -> Image {
    let src = FloatImage::from_image(img);
    let shift = (offset * 255.0) as f32;
    src.map_pixels(|x, y| {
        let p = src.pixel(x, y);
        let y0 = luma(p);
        let y1 = (y0 + shift).min(255.0);
        let d = y1 - y0;
        [p[0] + d, p[1] + d, p[2] + d]
    })
    .to_image()
}

/// Scale intensities by `scale` and add Poisson-like noise whose standard
/// deviation is `noise * sqrt(signal)` on the unit scale.
pub fn low_light(img: &Image, scale: f64, noise: f64, seed: DerivedSeed) -> Image {
    let mut rng = SeededRng::new(seed);
    let data = img
        .data()
        .iter()
        .map(|&v| {
            let s = v as f64 / 255.0 * scale;
            let n = rng.normal();
            let out = s + noise * libm::sqrt(s) * n;
            super::raster::to_u8((out * 255.0) as f32)
        })
        .collect();
    Image::new(img.width(), img.height(), data).expect("dimensions preserved")
}

/// Scale the deviation of every sample from the global mean by `factor`.
pub fn contrast(img: &Image, factor: f64) -> Image {
    let mean = img.mean() as f32;
    let factor = factor as f32;
    let data = img
        .data()
        .iter()
        .map(|&v| super::raster::to_u8((v as f32 - mean) * factor + mean))
        .collect();
    Image::new(img.width(), img.height(), data).expect("dimensions preserved")
}
