//! Fog, frost and snow.

use super::raster::{luma, plasma, FloatImage};
use super::{wrong_family, Image};
use crate::error::Result;
use crate::params::CameraParams;
use crate::rng::SeededRng;
use crate::seed::DerivedSeed;

pub fn apply_weather(img: &Image, params: &CameraParams, seed: DerivedSeed) -> Result<Image> {
    match *params {
        CameraParams::Fog { weight, decay } => Ok(fog(img, weight, decay, seed)),
        CameraParams::Frost { weight } => Ok(frost(img, weight, seed)),
        CameraParams::Snow {
            density,
            whiten,
            length,
        } => Ok(snow(img, density, whiten, length, seed)),
        _ => Err(wrong_family(params, "weather")),
    }
}

/// Per-pixel haze opacity: `weight * (0.6 + 0.4 * plasma)`, so it lies in
/// `[0.2 * weight, weight]` and averages `0.6 * weight`.
pub(crate) fn fog_alpha(w: usize, h: usize, weight: f64, decay: f64, seed: DerivedSeed) -> Vec<f32> {
    let mut rng = SeededRng::new(seed);
    let weight = weight as f32;
    plasma(w, h, decay, &mut rng)
        .into_iter()
        .map(|p| weight * (0.6 + 0.4 * p))
        .collect()
}

/// Blend toward white through a fractal haze layer: `x + a * (255 - x)`.
/// Fog can only lighten a pixel.
pub fn fog(img: &Image, weight: f64, decay: f64, seed: DerivedSeed) -> Image {
    let src = FloatImage::from_image(img);
    let alpha = fog_alpha(src.w, src.h, weight, decay, seed);
    let w = src.w;
    src.map_pixels(|x, y| {
        let a = alpha[y * w + x];
        let p = src.pixel(x, y);
        [
            p[0] + a * (255.0 - p[0]),
            p[1] + a * (255.0 - p[1]),
            p[2] + a * (255.0 - p[2]),
        ]
    })
    .to_image()
}

const ICE_TINT: [f32; 3] = [0.82, 0.9, 1.0];

/// Procedural ice: a rough fractal coverage map with short crystal streaks,
/// alpha-blended over the image with opacity `weight * coverage`.
pub fn frost(img: &Image, weight: f64, seed: DerivedSeed) -> Image {
    let src = FloatImage::from_image(img);
    let (w, h) = (src.w, src.h);
    let mut rng = SeededRng::new(seed);
    let mut coverage: Vec<f32> = plasma(w, h, 1.2, &mut rng)
        .into_iter()
        .map(|p| 0.5 + 0.5 * p)
        .collect();

    let crystals = (w * h / 400).max(1);
    for _ in 0..crystals {
        let x0 = rng.uniform() * w as f64;
        let y0 = rng.uniform() * h as f64;
        let angle = rng.uniform_range(0.0, std::f64::consts::TAU);
        let len = rng.uniform_range(3.0, 12.0);
        let (dx, dy) = (libm::cos(angle), libm::sin(angle));
        let mut t = 0.0;
        while t < len {
            let x = libm::floor(x0 + t * dx);
            let y = libm::floor(y0 + t * dy);
            if x >= 0.0 && y >= 0.0 && (x as usize) < w && (y as usize) < h {
                coverage[y as usize * w + x as usize] = 1.0;
            }
            t += 1.0;
        }
    }

    let weight = weight as f32;
    src.map_pixels(|x, y| {
        let c = coverage[y * w + x];
        let a = weight * c;
        let shade = 255.0 * (0.75 + 0.25 * c);
        let p = src.pixel(x, y);
        let mut out = [0.0; 3];
        for ch in 0..3 {
            out[ch] = (1.0 - a) * p[ch] + a * ICE_TINT[ch] * shade;
        }
        out
    })
    .to_image()
}

/// Whitening toward `max(x, 1.5 * luma + 127.5)` by `whiten`, then
/// `density * w * h` bright streaks of about `length` pixels falling at a
/// seeded wind angle within 30 degrees of vertical.
pub fn snow(img: &Image, density: f64, whiten: f64, length: f64, seed: DerivedSeed) -> Image {
    let src = FloatImage::from_image(img);
    let (w, h) = (src.w, src.h);
    let wh = whiten as f32;
    let mut buf = src.map_pixels(|x, y| {
        let p = src.pixel(x, y);
        let target = (1.5 * luma(p) + 127.5).min(255.0);
        let mut out = [0.0; 3];
        for c in 0..3 {
            out[c] = (1.0 - wh) * p[c] + wh * p[c].max(target);
        }
        out
    });

    let mut rng = SeededRng::new(seed);
    let wind = rng.uniform_range(-std::f64::consts::FRAC_PI_6, std::f64::consts::FRAC_PI_6);
    let (dx, dy) = (libm::sin(wind), libm::cos(wind));
    let flakes = libm::round(density * (w * h) as f64) as usize;
    for _ in 0..flakes {
        let x0 = rng.uniform() * w as f64;
        let y0 = rng.uniform() * h as f64;
        let bright = rng.uniform_range(0.6, 1.0) as f32;
        let len = length * rng.uniform_range(0.5, 1.5);
        let mut t = 0.0;
        while t < len {
            let x = libm::floor(x0 + t * dx);
            let y = libm::floor(y0 + t * dy);
            if x >= 0.0 && y >= 0.0 && (x as usize) < w && (y as usize) < h {
                let i = (y as usize * w + x as usize) * 3;
                for v in &mut buf.data[i..i + 3] {
                    *v += (255.0 - *v) * bright;
                }
            }
            t += 1.0;
        }
    }
    buf.to_image()
}
