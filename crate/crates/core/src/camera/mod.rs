//! Camera corruptions: deterministic image-to-image transforms.
//!
//! Every transform works on an interleaved RGB float buffer on the 0..=255
//! scale and rounds back to 8 bits once at the end. Randomness comes from a
//! single [`DerivedSeed`]; transcendental math goes through `libm`.

mod blur;
mod digital;
mod lighting;
mod noise;
mod raster;
mod weather;

pub use blur::{apply_blur, defocus_blur, glass_blur, motion_blur, zoom_blur};
pub use digital::{apply_digital, elastic_transform, jpeg_compression, pixelate, quantization};
pub use lighting::{apply_lighting, brightness, contrast, low_light};
pub use noise::{apply_noise, gaussian_noise, impulse_noise, iso_noise, shot_noise};
pub use weather::{apply_weather, fog, frost, snow};

use crate::corruption::{CorruptionType, Severity};
use crate::error::{Error, Result};
use crate::params::{CameraParams, ParamsTable};
use crate::seed::DerivedSeed;

/// 8-bit RGB raster, row-major, interleaved.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        let expected = (width as usize)
            .checked_mul(height as usize)
            .and_then(|n| n.checked_mul(3))
            .ok_or_else(|| Error::InvalidImage("dimensions overflow".into()))?;
        if data.len() != expected {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} RGB needs {expected} bytes, got {}",
                data.len()
            )));
        }
        Ok(Image {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * 3)
            .collect();
        Image {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Image {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Mean over every sample of every channel.
    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    /// Mean absolute per-sample difference against an image of equal size.
    pub fn mean_abs_diff(&self, other: &Image) -> f64 {
        assert_eq!((self.width, self.height), (other.width, other.height));
        if self.data.is_empty() {
            return 0.0;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a as f64 - b as f64).abs())
            .sum::<f64>()
            / self.data.len() as f64
    }
}

/// Apply a camera corruption at the given severity using the parameter table.
pub fn corrupt_image(
    img: &Image,
    corruption: CorruptionType,
    severity: Severity,
    seed: DerivedSeed,
    table: &ParamsTable,
) -> Result<Image> {
    if !corruption.is_camera() {
        return Err(Error::NotCameraCorruption(corruption));
    }
    if img.is_empty() {
        return Err(Error::InvalidImage("zero-sized image".into()));
    }
    match table.camera(corruption, severity)? {
        None => Ok(img.clone()),
        Some(params) => apply(img, &params, seed),
    }
}

/// Apply explicit corruption parameters.
pub fn apply(img: &Image, params: &CameraParams, seed: DerivedSeed) -> Result<Image> {
    if img.is_empty() {
        return Err(Error::InvalidImage("zero-sized image".into()));
    }
    use CameraParams::*;
    match params {
        Brightness { .. } | LowLight { .. } | Contrast { .. } => apply_lighting(img, params, seed),
        GaussianNoise { .. } | ShotNoise { .. } | ImpulseNoise { .. } | IsoNoise { .. } => {
            apply_noise(img, params, seed)
        }
        DefocusBlur { .. } | GlassBlur { .. } | MotionBlur { .. } | ZoomBlur { .. } => {
            apply_blur(img, params, seed)
        }
        Fog { .. } | Frost { .. } | Snow { .. } => apply_weather(img, params, seed),
        Pixelate { .. } | JpegCompression { .. } | ElasticTransform { .. } | Quantization { .. } => {
            apply_digital(img, params, seed)
        }
    }
}

fn wrong_family(params: &CameraParams, family: &str) -> Error {
    Error::InvalidConfig(format!(
        "{} is not a {family} corruption",
        params.corruption()
    ))
}
