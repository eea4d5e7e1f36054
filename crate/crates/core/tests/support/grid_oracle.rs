#![allow(dead_code)]
//! Naive per-cell IoU counting, kept deliberately separate from the library.

use robobench_core::grid::LabelGrid;
use robobench_core::rng::SeededRng;

pub const IGNORE: u32 = 255;

/// Per-class IoU by direct counting; `None` for classes absent from both.
pub fn iou(pred: &[u32], gt: &[u32], k: usize) -> Vec<Option<f64>> {
    (0..k as u32)
        .map(|c| {
            let (mut inter, mut union) = (0u64, 0u64);
            for (&p, &g) in pred.iter().zip(gt) {
                if g == IGNORE {
                    continue;
                }
                let (in_p, in_g) = (p == c, g == c);
                inter += (in_p && in_g) as u64;
                union += (in_p || in_g) as u64;
            }
            (union > 0).then(|| inter as f64 / union as f64)
        })
        .collect()
}

pub fn miou(pred: &[u32], gt: &[u32], k: usize, included: &[usize]) -> Option<f64> {
    let ious = iou(pred, gt, k);
    let present: Vec<f64> = included.iter().filter_map(|&c| ious[c]).collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

/// Random 2-D or 3-D grid pair, ≤ 16 cells per side and ≤ 6 classes, with
/// ignore cells in both.
pub fn random_pair(rng: &mut SeededRng) -> (LabelGrid, LabelGrid, usize) {
    let k = 1 + rng.below(6) as usize;
    let ndim = 2 + rng.below(2) as usize;
    let dims: Vec<usize> = (0..ndim).map(|_| 1 + rng.below(16) as usize).collect();
    let n: usize = dims.iter().product();
    let ignore_rate = rng.uniform() * 0.3;
    let label = |rng: &mut SeededRng| {
        if rng.uniform() < ignore_rate {
            IGNORE
        } else {
            rng.below(k as u64) as u32
        }
    };
    let gt: Vec<u32> = (0..n).map(|_| label(rng)).collect();
    let pred: Vec<u32> = gt
        .iter()
        .map(|&g| if g != IGNORE && rng.uniform() < 0.6 { g } else { label(rng) })
        .collect();
    (
        LabelGrid::new(dims.clone(), pred, IGNORE).unwrap(),
        LabelGrid::new(dims, gt, IGNORE).unwrap(),
        k,
    )
}
