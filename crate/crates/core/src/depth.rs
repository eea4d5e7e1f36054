//! Depth estimation metrics: Abs Rel, RMSE and the δ < 1.25ᵗ accuracies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl DepthMap {
    /// Metres per pixel, row-major. Non-positive GT values mark invalid pixels.
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        if width as usize * height as usize != values.len() {
            return Err(Error::format(
                "depth map",
                format!("{width}x{height} needs {} values, got {}", width as usize * height as usize, values.len()),
            ));
        }
        Ok(Self { width, height, values })
    }

    pub fn filled(width: u32, height: u32, value: f64) -> Self {
        Self { width, height, values: vec![value; width as usize * height as usize] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DepthMap {
        DepthMap { width: self.width, height: self.height, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    fn dims(&self) -> Vec<usize> {
        vec![self.height as usize, self.width as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthConfig {
    pub min_depth: f64,
    pub max_depth: f64,
    pub median_scaling: bool,
    /// Pool pixels across images instead of averaging per-image metrics.
    pub micro_average: bool,
}

impl Default for DepthConfig {
    fn default() -> Self {
        Self { min_depth: 1e-3, max_depth: 80.0, median_scaling: false, micro_average: false }
    }
}

impl DepthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_depth > 0.0 && self.min_depth < self.max_depth && self.max_depth.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "depth range [{}, {}] must satisfy 0 < min < max",
                self.min_depth, self.max_depth
            )));
        }
        Ok(())
    }

    fn is_valid_gt(&self, g: f64) -> bool {
        g > 0.0 && g >= self.min_depth && g <= self.max_depth
    }
}

/// δ values are percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthMetrics {
    pub abs_rel: f64,
    pub rmse: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthResult {
    pub metrics: DepthMetrics,
    pub images_evaluated: usize,
    /// Images without a single valid GT pixel.
    pub images_skipped: usize,
    pub valid_pixels: u64,
    /// Non-finite predictions replaced by the minimum depth.
    pub nonfinite_predictions: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    n: u64,
    abs_rel: f64,
    sq: f64,
    within: [u64; 3],
    nonfinite: u64,
}

impl Sums {
    fn metrics(&self) -> DepthMetrics {
        let n = self.n as f64;
        let pct = |k: usize| 100.0 * self.within[k] as f64 / n;
        DepthMetrics {
            abs_rel: self.abs_rel / n,
            rmse: (self.sq / n).sqrt(),
            delta1: pct(0),
            delta2: pct(1),
            delta3: pct(2),
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (_, &mut hi, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        hi
    } else {
        let lo = values[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Factor median(gt) / median(pred) over the pixels where `valid` holds.
pub fn median_scale(pred: &[f64], gt: &[f64], valid: impl Fn(usize) -> bool) -> Result<f64> {
    let idx: Vec<usize> = (0..gt.len().min(pred.len())).filter(|&i| valid(i)).collect();
    if idx.is_empty() {
        return Err(Error::InvalidMedian("no valid pixels".into()));
    }
    let mut p: Vec<f64> = idx.iter().map(|&i| pred[i]).collect();
    let mut g: Vec<f64> = idx.iter().map(|&i| gt[i]).collect();
    let (mp, mg) = (median(&mut p), median(&mut g));
    if !(mp > 0.0 && mp.is_finite()) {
        return Err(Error::InvalidMedian(format!("prediction median {mp} is not positive")));
    }
    if !(mg > 0.0 && mg.is_finite()) {
        return Err(Error::InvalidMedian(format!("ground-truth median {mg} is not positive")));
    }
    Ok(mg / mp)
}

fn image_sums(pred: &DepthMap, gt: &DepthMap, cfg: &DepthConfig) -> Result<Sums> {
    if pred.width != gt.width || pred.height != gt.height {
        return Err(Error::ShapeMismatch { pred: pred.dims(), gt: gt.dims() });
    }
    let valid = |i: usize| cfg.is_valid_gt(gt.values[i]);
    let mut sums = Sums::default();
    let mut p: Vec<f64> = pred
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v.is_finite() {
                v
            } else {
                sums.nonfinite += valid(i) as u64;
                cfg.min_depth
            }
        })
        .collect();
    if !(0..gt.values.len()).any(valid) {
        return Ok(sums);
    }
    if cfg.median_scaling {
        let s = median_scale(&p, &gt.values, valid)?;
        p.iter_mut().for_each(|v| *v *= s);
    }
    let thresholds = [1.25f64, 1.25f64.powi(2), 1.25f64.powi(3)];
    for (i, &g) in gt.values.iter().enumerate() {
        if !valid(i) {
            continue;
        }
        let q = p[i].clamp(cfg.min_depth, cfg.max_depth);
        let diff = g - q;
        sums.n += 1;
        sums.abs_rel += diff.abs() / g;
        sums.sq += diff * diff;
        let ratio = (g / q).max(q / g);
        for (k, t) in thresholds.iter().enumerate() {
            sums.within[k] += (ratio < *t) as u64;
        }
    }
    Ok(sums)
}

/// Metrics of a single image; `None` when it has no valid GT pixel.
pub fn evaluate_depth(pred: &DepthMap, gt: &DepthMap, cfg: &DepthConfig) -> Result<Option<DepthMetrics>> {
    cfg.validate()?;
    let sums = image_sums(pred, gt, cfg)?;
    Ok((sums.n > 0).then(|| sums.metrics()))
}

/// Dataset metrics: the unweighted mean of per-image metrics, or pooled
/// pixels when `micro_average` is set. Images without valid pixels are skipped.
pub fn evaluate_depth_set(pairs: &[(&DepthMap, &DepthMap)], cfg: &DepthConfig) -> Result<DepthResult> {
    cfg.validate()?;
    let per_image: Vec<Sums> = pairs
        .par_iter()
        .map(|(p, g)| image_sums(p, g, cfg))
        .collect::<Result<_>>()?;
    let scored: Vec<&Sums> = per_image.iter().filter(|s| s.n > 0).collect();
    if scored.is_empty() {
        return Err(Error::NoValidDepth);
    }
    let metrics = if cfg.micro_average {
        let mut pooled = Sums::default();
        for s in &scored {
            pooled.n += s.n;
            pooled.abs_rel += s.abs_rel;
            pooled.sq += s.sq;
            for k in 0..3 {
                pooled.within[k] += s.within[k];
            }
        }
        pooled.metrics()
    } else {
        let m: Vec<DepthMetrics> = scored.iter().map(|s| s.metrics()).collect();
        let mean = |f: fn(&DepthMetrics) -> f64| m.iter().map(f).sum::<f64>() / m.len() as f64;
        DepthMetrics {
            abs_rel: mean(|x| x.abs_rel),
            rmse: mean(|x| x.rmse),
            delta1: mean(|x| x.delta1),
            delta2: mean(|x| x.delta2),
            delta3: mean(|x| x.delta3),
        }
    };
    Ok(DepthResult {
        metrics,
        images_evaluated: scored.len(),
        images_skipped: per_image.len() - scored.len(),
        valid_pixels: scored.iter().map(|s| s.n).sum(),
        nonfinite_predictions: per_image.iter().map(|s| s.nonfinite).sum(),
    })
}
