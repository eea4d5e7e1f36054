//! Defocus, glass, motion and zoom blur. All kernels are normalized, so a
//! constant image is left unchanged.

use super::raster::{convolve, gaussian_blur, FloatImage, Kernel};
use super::{wrong_family, Image};
use crate::error::Result;
use crate::params::CameraParams;
use crate::rng::SeededRng;
use crate::seed::DerivedSeed;

pub fn apply_blur(img: &Image, params: &CameraParams, seed: DerivedSeed) -> Result<Image> {
    match *params {
        CameraParams::DefocusBlur { radius } => Ok(defocus_blur(img, radius)),
        CameraParams::GlassBlur {
            sigma,
            max_delta,
            iterations,
        } => Ok(glass_blur(img, sigma, max_delta, iterations, seed)),
        CameraParams::MotionBlur { length } => Ok(motion_blur(img, length, seed)),
        CameraParams::ZoomBlur { max_zoom, step } => Ok(zoom_blur(img, max_zoom, step)),
        _ => Err(wrong_family(params, "blur")),
    }
}

pub(crate) fn disk_kernel(radius: f64) -> Kernel {
    let r = libm::floor(radius) as i32;
    let mut taps = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if ((dx * dx + dy * dy) as f64) <= radius * radius {
                taps.push((dx, dy, 1.0));
            }
        }
    }
    Kernel::normalized(taps)
}

/// Convolution with a uniform disk of the given radius (pixels).
pub fn defocus_blur(img: &Image, radius: f64) -> Image {
    let src = FloatImage::from_image(img);
    convolve(&src, &disk_kernel(radius)).to_image()
}

/// Gaussian blur, then `iterations` passes of seeded local pixel swaps within
/// `max_delta` pixels, then a second Gaussian blur.
pub fn glass_blur(
    img: &Image,
    sigma: f64,
    max_delta: u32,
    iterations: u32,
    seed: DerivedSeed,
) -> Image {
    let mut rng = SeededRng::new(seed);
    let mut buf = gaussian_blur(&FloatImage::from_image(img), sigma);
    let (w, h) = (buf.w, buf.h);
    let d = max_delta as usize;
    if d > 0 && w > 2 * d && h > 2 * d {
        let span = 2 * max_delta as u64 + 1;
        for _ in 0..iterations {
            for y in (d..h - d).rev() {
                for x in (d..w - d).rev() {
                    let dx = rng.below(span) as i64 - d as i64;
                    let dy = rng.below(span) as i64 - d as i64;
                    let nx = (x as i64 + dx) as usize;
                    let ny = (y as i64 + dy) as usize;
                    let a = (y * w + x) * 3;
                    let b = (ny * w + nx) * 3;
                    for c in 0..3 {
                        buf.data.swap(a + c, b + c);
                    }
                }
            }
        }
    }
    gaussian_blur(&buf, sigma).to_image()
}

/// Average of `length` bilinear samples along a line through each pixel, at a
/// seeded angle within 45 degrees of horizontal.
pub fn motion_blur(img: &Image, length: u32, seed: DerivedSeed) -> Image {
    if length <= 1 {
        return img.clone();
    }
    let mut rng = SeededRng::new(seed);
    let angle = rng.uniform_range(-std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_4);
    let (dx, dy) = (libm::cos(angle) as f32, libm::sin(angle) as f32);
    let offsets: Vec<(f32, f32)> = (0..length)
        .map(|k| {
            let t = k as f32 - (length - 1) as f32 / 2.0;
            (t * dx, t * dy)
        })
        .collect();
    let src = FloatImage::from_image(img);
    let inv = 1.0 / length as f32;
    src.map_pixels(|x, y| {
        let mut acc = [0.0f32; 3];
        for &(ox, oy) in &offsets {
            let p = src.sample(x as f32 + ox, y as f32 + oy);
            acc[0] += p[0];
            acc[1] += p[1];
            acc[2] += p[2];
        }
        [acc[0] * inv, acc[1] * inv, acc[2] * inv]
    })
    .to_image()
}

pub(crate) fn zoom_factors(max_zoom: f64, step: f64) -> Vec<f64> {
    let count = libm::ceil((max_zoom - 1.0) / step - 1e-9).max(1.0) as usize;
    (0..count).map(|k| 1.0 + k as f64 * step).collect()
}

/// Average of the image and copies scaled about the center by each factor
/// in `1, 1 + step, ...` below `max_zoom`.
pub fn zoom_blur(img: &Image, max_zoom: f64, step: f64) -> Image {
    let src = FloatImage::from_image(img);
    let zooms: Vec<f32> = zoom_factors(max_zoom, step)
        .into_iter()
        .map(|z| z as f32)
        .collect();
    let cx = (src.w - 1) as f32 / 2.0;
    let cy = (src.h - 1) as f32 / 2.0;
    let inv = 1.0 / (zooms.len() + 1) as f32;
    src.map_pixels(|x, y| {
        let mut acc = src.pixel(x, y);
        for &z in &zooms {
            let sx = cx + (x as f32 - cx) / z;
            let sy = cy + (y as f32 - cy) / z;
            let p = src.sample(sx, sy);
            acc[0] += p[0];
            acc[1] += p[1];
            acc[2] += p[2];
        }
        [acc[0] * inv, acc[1] * inv, acc[2] * inv]
    })
    .to_image()
}
