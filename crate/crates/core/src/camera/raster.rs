//! Float raster helpers shared by the corruption families.

use rayon::prelude::*;

use super::Image;
use crate::rng::SeededRng;

/// Interleaved RGB samples on the 0..=255 scale.
#[derive(Debug, Clone)]
pub(crate) struct FloatImage {
    pub w: usize,
    pub h: usize,
    pub data: Vec<f32>,
}

impl FloatImage {
    pub fn from_image(img: &Image) -> Self {
        FloatImage {
            w: img.width() as usize,
            h: img.height() as usize,
            data: img.data().iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn to_image(&self) -> Image {
        let data = self.data.iter().map(|&v| to_u8(v)).collect();
        Image::new(self.w as u32, self.h as u32, data).expect("dimensions preserved")
    }

    pub fn zeros_like(&self) -> Self {
        FloatImage {
            w: self.w,
            h: self.h,
            data: vec![0.0; self.data.len()],
        }
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.w + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Bilinear sample with edge clamping. Integral coordinates return the
    /// stored pixel exactly.
    pub fn sample(&self, x: f32, y: f32) -> [f32; 3] {
        let x = x.clamp(0.0, (self.w - 1) as f32);
        let y = y.clamp(0.0, (self.h - 1) as f32);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let fx = x - x0 as f32;
        let fy = y - y0 as f32;
        let x1 = (x0 + 1).min(self.w - 1);
        let y1 = (y0 + 1).min(self.h - 1);
        let p00 = self.pixel(x0, y0);
        let p10 = self.pixel(x1, y0);
        let p01 = self.pixel(x0, y1);
        let p11 = self.pixel(x1, y1);
        let mut out = [0.0; 3];
        for c in 0..3 {
            let top = p00[c] * (1.0 - fx) + p10[c] * fx;
            let bottom = p01[c] * (1.0 - fx) + p11[c] * fx;
            out[c] = top * (1.0 - fy) + bottom * fy;
        }
        out
    }

    /// Build a new image by computing every output pixel independently.
    pub fn map_pixels(&self, f: impl Fn(usize, usize) -> [f32; 3] + Sync) -> FloatImage {
        let mut out = self.zeros_like();
        let w = self.w;
        out.data
            .par_chunks_mut(w * 3)
            .enumerate()
            .for_each(|(y, row)| {
                for x in 0..w {
                    let p = f(x, y);
                    row[x * 3..x * 3 + 3].copy_from_slice(&p);
                }
            });
        out
    }
}

#[inline]
pub(crate) fn to_u8(v: f32) -> u8 {
    if v.is_nan() {
        return 0;
    }
    v.round().clamp(0.0, 255.0) as u8
}

/// A sparse 2-D kernel: (dx, dy, weight) taps whose weights sum to one.
#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    pub taps: Vec<(i32, i32, f32)>,
}

impl Kernel {
    pub fn normalized(mut taps: Vec<(i32, i32, f32)>) -> Self {
        let total: f64 = taps.iter().map(|t| t.2 as f64).sum();
        for t in &mut taps {
            t.2 = (t.2 as f64 / total) as f32;
        }
        Kernel { taps }
    }

    pub fn is_identity(&self) -> bool {
        self.taps.len() == 1 && self.taps[0].0 == 0 && self.taps[0].1 == 0
    }
}

/// Edge-clamped correlation with a sparse kernel.
pub(crate) fn convolve(src: &FloatImage, kernel: &Kernel) -> FloatImage {
    if kernel.is_identity() {
        return src.clone();
    }
    let (w, h) = (src.w as i64, src.h as i64);
    src.map_pixels(|x, y| {
        let mut acc = [0.0f32; 3];
        for &(dx, dy, wt) in &kernel.taps {
            let sx = (x as i64 + dx as i64).clamp(0, w - 1) as usize;
            let sy = (y as i64 + dy as i64).clamp(0, h - 1) as usize;
            let p = src.pixel(sx, sy);
            acc[0] += p[0] * wt;
            acc[1] += p[1] * wt;
            acc[2] += p[2] * wt;
        }
        acc
    })
}

pub(crate) fn gaussian_weights(sigma: f64) -> Vec<f32> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = libm::ceil(3.0 * sigma) as i32;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|i| libm::exp(-((i * i) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| (v / total) as f32).collect()
}

/// Separable Gaussian blur on a single-channel field, edge clamped.
pub(crate) fn gaussian_blur_plane(plane: &[f32], w: usize, h: usize, sigma: f64) -> Vec<f32> {
    let weights = gaussian_weights(sigma);
    if weights.len() == 1 {
        return plane.to_vec();
    }
    let r = (weights.len() / 2) as i64;
    let mut tmp = vec![0.0f32; plane.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, wt) in weights.iter().enumerate() {
                let sx = (x as i64 + k as i64 - r).clamp(0, w as i64 - 1) as usize;
                acc += plane[y * w + sx] * wt;
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0f32; plane.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, wt) in weights.iter().enumerate() {
                let sy = (y as i64 + k as i64 - r).clamp(0, h as i64 - 1) as usize;
                acc += tmp[sy * w + x] * wt;
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Separable Gaussian blur on an RGB image.
pub(crate) fn gaussian_blur(src: &FloatImage, sigma: f64) -> FloatImage {
    let weights = gaussian_weights(sigma);
    if weights.len() == 1 {
        return src.clone();
    }
    let mut taps = Vec::new();
    let r = (weights.len() / 2) as i32;
    for (i, wy) in weights.iter().enumerate() {
        for (j, wx) in weights.iter().enumerate() {
            taps.push((j as i32 - r, i as i32 - r, wx * wy));
        }
    }
    convolve(src, &Kernel::normalized(taps))
}

/// Diamond-square fractal noise, cropped to `w` x `h` and normalized to zero
/// mean with maximum absolute value 1. `decay` divides the perturbation
/// amplitude at every octave; larger values give smoother fields.
pub(crate) fn plasma(w: usize, h: usize, decay: f64, rng: &mut SeededRng) -> Vec<f32> {
    let n = w.max(h).max(2).next_power_of_two();
    let mut m = vec![0.0f64; n * n];
    let idx = |x: usize, y: usize| (y % n) * n + (x % n);
    let mut step = n;
    let mut wibble = 1.0f64;
    while step >= 2 {
        let half = step / 2;
        for y in (0..n).step_by(step) {
            for x in (0..n).step_by(step) {
                let mean = (m[idx(x, y)]
                    + m[idx(x + step, y)]
                    + m[idx(x, y + step)]
                    + m[idx(x + step, y + step)])
                    / 4.0;
                m[idx(x + half, y + half)] = mean + wibble * rng.uniform_range(-1.0, 1.0);
            }
        }
        for y in (0..n).step_by(step) {
            for x in (0..n).step_by(step) {
                // Top edge midpoint.
                let up = (y + n - half) % n;
                let mean = (m[idx(x, y)]
                    + m[idx(x + step, y)]
                    + m[idx(x + half, up)]
                    + m[idx(x + half, y + half)])
                    / 4.0;
                m[idx(x + half, y)] = mean + wibble * rng.uniform_range(-1.0, 1.0);
                // Left edge midpoint.
                let left = (x + n - half) % n;
                let mean = (m[idx(x, y)]
                    + m[idx(x, y + step)]
                    + m[idx(left, y + half)]
                    + m[idx(x + half, y + half)])
                    / 4.0;
                m[idx(x, y + half)] = mean + wibble * rng.uniform_range(-1.0, 1.0);
            }
        }
        wibble /= decay;
        step = half;
    }
    let mut field: Vec<f64> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| m[y * n + x])
        .collect();
    let mean = field.iter().sum::<f64>() / field.len() as f64;
    let max_abs = field
        .iter()
        .map(|v| (v - mean).abs())
        .fold(0.0f64, f64::max);
    for v in &mut field {
        *v = if max_abs > 0.0 { (*v - mean) / max_abs } else { 0.0 };
    }
    field.into_iter().map(|v| v as f32).collect()
}

/// ITU-R BT.601 luma of an RGB triple.
#[inline]
pub(crate) fn luma(p: [f32; 3]) -> f32 {
    0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]
}
