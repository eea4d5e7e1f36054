//! Confusion-matrix IoU and mIoU for BEV map segmentation and semantic
//! occupancy. Both tracks use the same formula on 2-D cells or 3-D voxels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_IGNORE: u32 = 255;

/// Threshold above which a probability channel counts as "on".
pub const PROBABILITY_THRESHOLD: f32 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelGrid {
    dims: Vec<usize>,
    labels: Vec<u32>,
    ignore_value: u32,
}

impl LabelGrid {
    /// `dims` is H×W or X×Y×Z; labels are row-major with the last axis fastest.
    pub fn new(dims: Vec<usize>, labels: Vec<u32>, ignore_value: u32) -> Result<Self> {
        if !(2..=3).contains(&dims.len()) {
            return Err(Error::format("label grid", format!("{} dimensions, expected 2 or 3", dims.len())));
        }
        let cells = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::format("label grid", "dimensions overflow"))?;
        if cells != labels.len() {
            return Err(Error::format(
                "label grid",
                format!("dims {dims:?} need {cells} labels, got {}", labels.len()),
            ));
        }
        Ok(Self { dims, labels, ignore_value })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn ignore_value(&self) -> u32 {
        self.ignore_value
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// A grid of the same shape in which every cell is `ignore_value`.
    pub fn all_ignored(dims: Vec<usize>, ignore_value: u32) -> Result<Self> {
        let n = dims.iter().product();
        Self::new(dims, vec![ignore_value; n], ignore_value)
    }
}

/// Turn per-class probability channels (`num_classes` planes of `cells`
/// values each) into labels: the most probable channel at or above 0.5 wins,
/// earlier channels on ties; cells with no such channel get `fallback`.
pub fn labels_from_probabilities(probs: &[f32], num_classes: usize, fallback: u32) -> Result<Vec<u32>> {
    if num_classes == 0 || !probs.len().is_multiple_of(num_classes) {
        return Err(Error::format(
            "probability grid",
            format!("{} values do not split into {num_classes} channels", probs.len()),
        ));
    }
    if let Some(i) = probs.iter().position(|p| !p.is_finite()) {
        return Err(Error::format("probability grid", format!("value {i} is not finite")));
    }
    let cells = probs.len() / num_classes;
    Ok((0..cells)
        .into_par_iter()
        .map(|cell| {
            let mut best: Option<(u32, f32)> = None;
            for c in 0..num_classes {
                let p = probs[c * cells + cell];
                if p >= PROBABILITY_THRESHOLD && best.is_none_or(|(_, bp)| p > bp) {
                    best = Some((c as u32, p));
                }
            }
            best.map_or(fallback, |(c, _)| c)
        })
        .collect())
}

/// Rows are ground-truth classes, columns predicted classes. Valid GT cells
/// whose prediction is the ignore value are tallied in `missed` and count as
/// false negatives of the GT class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
    missed: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self {
            num_classes,
            counts: vec![0; num_classes * num_classes],
            missed: vec![0; num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.num_classes + pred]
    }

    pub fn missed(&self, gt: usize) -> u64 {
        self.missed[gt]
    }

    /// Number of non-ignored GT cells accumulated so far.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.missed.iter().sum::<u64>()
    }

    /// All GT cells of class `i`, including ones predicted as ignore.
    pub fn gt_count(&self, i: usize) -> u64 {
        let row = &self.counts[i * self.num_classes..(i + 1) * self.num_classes];
        row.iter().sum::<u64>() + self.missed[i]
    }

    /// Cells predicted as class `i` on valid GT.
    pub fn pred_count(&self, i: usize) -> u64 {
        (0..self.num_classes).map(|g| self.get(g, i)).sum()
    }

    pub fn accumulate(&mut self, pred: &LabelGrid, gt: &LabelGrid) -> Result<()> {
        if pred.dims != gt.dims {
            return Err(Error::ShapeMismatch {
                pred: pred.dims.clone(),
                gt: gt.dims.clone(),
            });
        }
        let k = self.num_classes;
        let check = |label: u32, ignore: u32| -> Result<()> {
            if label != ignore && label as usize >= k {
                return Err(Error::LabelOutOfRange { label, num_classes: k });
            }
            Ok(())
        };
        const CHUNK: usize = 1 << 14;
        let partials: Vec<Result<ConfusionMatrix>> = gt
            .labels
            .par_chunks(CHUNK)
            .zip(pred.labels.par_chunks(CHUNK))
            .map(|(g, p)| {
                let mut cm = ConfusionMatrix::new(k);
                for (&gl, &pl) in g.iter().zip(p) {
                    check(gl, gt.ignore_value)?;
                    check(pl, pred.ignore_value)?;
                    if gl == gt.ignore_value {
                        continue;
                    }
                    if pl == pred.ignore_value {
                        cm.missed[gl as usize] += 1;
                    } else {
                        cm.counts[gl as usize * k + pl as usize] += 1;
                    }
                }
                Ok(cm)
            })
            .collect();
        let mut sum = ConfusionMatrix::new(k);
        for part in partials {
            sum.merge(&part?)?;
        }
        self.merge(&sum)
    }

    /// Add another matrix's counts.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.num_classes != self.num_classes {
            return Err(Error::InvalidConfig(format!(
                "cannot merge {}-class and {}-class confusion matrices",
                self.num_classes, other.num_classes
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.missed.iter_mut().zip(&other.missed) {
            *a += b;
        }
        Ok(())
    }
}

/// IoU = TP / (TP + FP + FN) per class; `None` when the class occurs in
/// neither ground truth nor prediction.
pub fn iou_per_class(cm: &ConfusionMatrix) -> Vec<Option<f64>> {
    (0..cm.num_classes)
        .map(|i| {
            let tp = cm.get(i, i);
            let denom = cm.gt_count(i) + cm.pred_count(i) - tp;
            (denom > 0).then(|| tp as f64 / denom as f64)
        })
        .collect()
}

/// Mean IoU over the included classes that are present.
pub fn miou(cm: &ConfusionMatrix, included: &[usize]) -> Result<f64> {
    let ious = iou_per_class(cm);
    if let Some(&c) = included.iter().find(|&&c| c >= ious.len()) {
        return Err(Error::InvalidConfig(format!("class index {c} out of range")));
    }
    let present: Vec<f64> = included.iter().filter_map(|&c| ious[c]).collect();
    if present.is_empty() {
        return Err(Error::UndefinedMiou);
    }
    Ok(present.iter().sum::<f64>() / present.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub per_class: Vec<Option<f64>>,
    pub included: Vec<usize>,
    pub miou: f64,
}

/// Evaluate a batch of grid pairs, excluding `excluded` classes (e.g. the
/// free-space class of occupancy) from the mean.
pub fn evaluate_grids<'a>(
    pairs: impl IntoIterator<Item = (&'a LabelGrid, &'a LabelGrid)>,
    num_classes: usize,
    excluded: &[usize],
) -> Result<GridResult> {
    let mut cm = ConfusionMatrix::new(num_classes);
    for (pred, gt) in pairs {
        cm.accumulate(pred, gt)?;
    }
    let included: Vec<usize> = (0..num_classes).filter(|c| !excluded.contains(c)).collect();
    let miou = miou(&cm, &included)?;
    Ok(GridResult {
        per_class: iou_per_class(&cm),
        included,
        miou,
    })
}
