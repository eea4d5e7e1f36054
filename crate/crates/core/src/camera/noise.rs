//! Sensor noise models. Sigmas and read noise are fractions of full scale.

use super::raster::to_u8;
use super::{wrong_family, Image};
use crate::error::Result;
use crate::params::CameraParams;
use crate::rng::SeededRng;
use crate::seed::DerivedSeed;

pub fn apply_noise(img: &Image, params: &CameraParams, seed: DerivedSeed) -> Result<Image> {
    match *params {
        CameraParams::GaussianNoise { sigma } => Ok(gaussian_noise(img, sigma, seed)),
        CameraParams::ShotNoise { photons } => Ok(shot_noise(img, photons, seed)),
        CameraParams::ImpulseNoise { fraction } => Ok(impulse_noise(img, fraction, seed)),
        CameraParams::IsoNoise { gain, read_sigma } => Ok(iso_noise(img, gain, read_sigma, seed)),
        _ => Err(wrong_family(params, "noise")),
    }
}

fn map_samples(img: &Image, mut f: impl FnMut(f64) -> f64) -> Image {
    let data = img
        .data()
        .iter()
        .map(|&v| to_u8((f(v as f64 / 255.0) * 255.0) as f32))
        .collect();
    Image::new(img.width(), img.height(), data).expect("dimensions preserved")
}

/// Additive i.i.d. normal noise.
pub fn gaussian_noise(img: &Image, sigma: f64, seed: DerivedSeed) -> Image {
    let mut rng = SeededRng::new(seed);
    map_samples(img, |v| v + sigma * rng.normal())
}

/// Photon-counting noise: `Poisson(v * photons) / photons`.
pub fn shot_noise(img: &Image, photons: f64, seed: DerivedSeed) -> Image {
    let mut rng = SeededRng::new(seed);
    map_samples(img, |v| rng.poisson(v * photons) as f64 / photons)
}

/// Salt-and-pepper: each pixel is replaced with probability `fraction` by
/// black or white (all three channels), chosen by a fair coin.
pub fn impulse_noise(img: &Image, fraction: f64, seed: DerivedSeed) -> Image {
    if fraction <= 0.0 {
        return img.clone();
    }
    let mut rng = SeededRng::new(seed);
    let mut data = img.data().to_vec();
    for px in data.chunks_exact_mut(3) {
        if rng.uniform() < fraction {
            let v = if rng.coin() { 255 } else { 0 };
            px.fill(v);
        }
    }
    Image::new(img.width(), img.height(), data).expect("dimensions preserved")
}

/// Signal-dependent noise (`gain * sqrt(v)`) plus signal-independent read
/// noise, drawn independently per channel.
pub fn iso_noise(img: &Image, gain: f64, read_sigma: f64, seed: DerivedSeed) -> Image {
    let mut rng = SeededRng::new(seed);
    map_samples(img, |v| {
        let shot = gain * libm::sqrt(v) * rng.normal();
        let read = read_sigma * rng.normal();
        v + shot + read
    })
}
