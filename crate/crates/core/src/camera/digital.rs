//! Pixelation, JPEG round trip, elastic warping and posterization.

use std::io::Cursor;

use super::raster::{gaussian_blur_plane, FloatImage};
use super::{wrong_family, Image};
use crate::error::{Error, Result};
use crate::params::CameraParams;
use crate::rng::SeededRng;
use crate::seed::DerivedSeed;

pub fn apply_digital(img: &Image, params: &CameraParams, seed: DerivedSeed) -> Result<Image> {
    match *params {
        CameraParams::Pixelate { factor } => Ok(pixelate(img, factor)),
        CameraParams::JpegCompression { quality } => jpeg_compression(img, quality),
        CameraParams::ElasticTransform { alpha, sigma } => {
            Ok(elastic_transform(img, alpha, sigma, seed))
        }
        CameraParams::Quantization { bits } => Ok(quantization(img, bits)),
        _ => Err(wrong_family(params, "digital")),
    }
}

/// Replace each `factor` x `factor` block by its mean (box downsample followed
/// by nearest-neighbour upsample). Partial blocks at the borders average the
/// pixels they contain.
pub fn pixelate(img: &Image, factor: u32) -> Image {
    if factor <= 1 {
        return img.clone();
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    let k = factor as usize;
    let mut data = img.data().to_vec();
    for by in (0..h).step_by(k) {
        for bx in (0..w).step_by(k) {
            let (ye, xe) = ((by + k).min(h), (bx + k).min(w));
            let mut sum = [0u32; 3];
            for y in by..ye {
                for x in bx..xe {
                    let p = img.pixel(x as u32, y as u32);
                    for c in 0..3 {
                        sum[c] += p[c] as u32;
                    }
                }
            }
            let n = ((ye - by) * (xe - bx)) as u32;
            // Integer round-half-up of the block mean.
            let mean = sum.map(|s| ((2 * s + n) / (2 * n)) as u8);
            for y in by..ye {
                for x in bx..xe {
                    let i = (y * w + x) * 3;
                    data[i..i + 3].copy_from_slice(&mean);
                }
            }
        }
    }
    Image::new(img.width(), img.height(), data).expect("dimensions preserved")
}

/// Encode as baseline sequential JPEG (4:2:0 chroma subsampling, standard
/// Huffman tables) at `quality`, then decode.
pub fn jpeg_compression(img: &Image, quality: u8) -> Result<Image> {
    let (w, h) = (img.width(), img.height());
    if w > u16::MAX as u32 || h > u16::MAX as u32 {
        return Err(Error::InvalidImage(format!(
            "{w}x{h} exceeds the JPEG dimension limit"
        )));
    }
    let mut encoded = Vec::new();
    let mut encoder = jpeg_encoder::Encoder::new(&mut encoded, quality.clamp(1, 100));
    encoder.set_sampling_factor(jpeg_encoder::SamplingFactor::F_2_2);
    encoder.set_progressive(false);
    encoder.set_optimized_huffman_tables(false);
    encoder
        .encode(img.data(), w as u16, h as u16, jpeg_encoder::ColorType::Rgb)
        .map_err(|e| Error::Internal(format!("jpeg encode: {e}")))?;

    let mut decoder = jpeg_decoder::Decoder::new(Cursor::new(encoded));
    let pixels = decoder
        .decode()
        .map_err(|e| Error::Internal(format!("jpeg decode: {e}")))?;
    Image::new(w, h, pixels)
}

fn displacement(w: usize, h: usize, blur_sigma: f64, max_disp: f32, rng: &mut SeededRng) -> Vec<f32> {
    let raw: Vec<f32> = (0..w * h).map(|_| rng.uniform_range(-1.0, 1.0) as f32).collect();
    let smooth = gaussian_blur_plane(&raw, w, h, blur_sigma);
    let max_abs = smooth.iter().fold(0.0f32, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return vec![0.0; w * h];
    }
    smooth.into_iter().map(|v| v / max_abs * max_disp).collect()
}

/// Warp by a smoothed random displacement field. `alpha` is the largest
/// displacement and `sigma` the smoothing scale, both as fractions of the
/// shorter image side. Sampling coordinates are clamped to the image.
pub fn elastic_transform(img: &Image, alpha: f64, sigma: f64, seed: DerivedSeed) -> Image {
    let src = FloatImage::from_image(img);
    let (w, h) = (src.w, src.h);
    let side = w.min(h) as f64;
    let max_disp = (alpha * side) as f32;
    let blur_sigma = sigma * side;
    let mut rng_x = SeededRng::stream(seed, 0);
    let mut rng_y = SeededRng::stream(seed, 1);
    let dx = displacement(w, h, blur_sigma, max_disp, &mut rng_x);
    let dy = displacement(w, h, blur_sigma, max_disp, &mut rng_y);
    src.map_pixels(|x, y| {
        let i = y * w + x;
        src.sample(x as f32 + dx[i], y as f32 + dy[i])
    })
    .to_image()
}

/// Keep the top `bits` bits of every sample.
pub fn quantization(img: &Image, bits: u32) -> Image {
    let bits = bits.clamp(1, 8);
    let mask = !((1u16 << (8 - bits)) - 1) as u8;
    let data = img.data().iter().map(|&v| v & mask).collect();
    Image::new(img.width(), img.height(), data).expect("dimensions preserved")
}
