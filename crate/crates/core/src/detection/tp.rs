use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::matching::Match;
use super::{DetBox, GtBox};

/// Mean true-positive errors: translation (m), scale (1 - IoU), orientation
/// (rad), velocity (m/s) and attribute (1 - accuracy).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpErrors {
    pub ate: f64,
    pub ase: f64,
    pub aoe: f64,
    pub ave: f64,
    pub aae: f64,
}

impl TpErrors {
    pub const WORST: TpErrors = TpErrors { ate: 1.0, ase: 1.0, aoe: 1.0, ave: 1.0, aae: 1.0 };
    pub const ZERO: TpErrors = TpErrors { ate: 0.0, ase: 0.0, aoe: 0.0, ave: 0.0, aae: 0.0 };

    pub fn as_array(&self) -> [f64; 5] {
        [self.ate, self.ase, self.aoe, self.ave, self.aae]
    }
}

/// TP errors where velocity and attribute may be undefined: per class for
/// classes configured as attribute-less, and in the class mean when every
/// scored class is attribute-less.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialTpErrors {
    pub ate: f64,
    pub ase: f64,
    pub aoe: f64,
    pub ave: Option<f64>,
    pub aae: Option<f64>,
}

/// Smallest absolute difference between two headings, in `[0, pi]`.
pub fn yaw_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        TAU - d
    } else {
        d
    }
}

/// IoU of two boxes after aligning their centres and headings.
pub fn aligned_iou(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let inter: f64 = a.iter().zip(b).map(|(x, y)| x.min(*y)).product();
    let union = a.iter().product::<f64>() + b.iter().product::<f64>() - inter;
    inter / union
}

/// Plain means over the matched pairs; every error is 1 without matches.
pub fn class_tp_errors(matches: &[Match], preds: &[DetBox], gts: &[GtBox], with_attributes: bool) -> PartialTpErrors {
    if matches.is_empty() {
        let opt = with_attributes.then_some(1.0);
        return PartialTpErrors { ate: 1.0, ase: 1.0, aoe: 1.0, ave: opt, aae: opt };
    }
    let mut sum = [0.0f64; 5];
    for m in matches {
        let (p, g) = (&preds[m.pred], &gts[m.gt]);
        sum[0] += m.distance;
        sum[1] += 1.0 - aligned_iou(&p.size, &g.size);
        sum[2] += yaw_difference(p.yaw, g.yaw);
        let (dvx, dvy) = (p.velocity[0] - g.velocity[0], p.velocity[1] - g.velocity[1]);
        sum[3] += (dvx * dvx + dvy * dvy).sqrt();
        sum[4] += (p.attribute != g.attribute) as u8 as f64;
    }
    let n = matches.len() as f64;
    PartialTpErrors {
        ate: sum[0] / n,
        ase: sum[1] / n,
        aoe: sum[2] / n,
        ave: with_attributes.then_some(sum[3] / n),
        aae: with_attributes.then_some(sum[4] / n),
    }
}

/// Average per-class errors over the classes that report each metric; a
/// metric no class reports stays undefined. `classes` must be non-empty.
pub fn mean_tp_errors(classes: &[PartialTpErrors]) -> PartialTpErrors {
    fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
        let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        (n > 0).then(|| s / n as f64)
    }
    PartialTpErrors {
        ate: mean(classes.iter().map(|c| c.ate)).unwrap_or(1.0),
        ase: mean(classes.iter().map(|c| c.ase)).unwrap_or(1.0),
        aoe: mean(classes.iter().map(|c| c.aoe)).unwrap_or(1.0),
        ave: mean(classes.iter().filter_map(|c| c.ave)),
        aae: mean(classes.iter().filter_map(|c| c.aae)),
    }
}

/// Detection score: half mAP, half the five clipped TP errors.
pub fn nds(map: f64, tp: &TpErrors) -> f64 {
    let tp_part: f64 = tp.as_array().iter().map(|&e| 1.0 - e.min(1.0)).sum();
    (5.0 * map + tp_part) / 10.0
}

/// [`nds`] with undefined TP terms dropped and the remaining weights
/// renormalized; identical to [`nds`] when all five are defined.
pub fn nds_partial(map: f64, tp: &PartialTpErrors) -> f64 {
    if let (Some(ave), Some(aae)) = (tp.ave, tp.aae) {
        return nds(map, &TpErrors { ate: tp.ate, ase: tp.ase, aoe: tp.aoe, ave, aae });
    }
    let defined = [Some(tp.ate), Some(tp.ase), Some(tp.aoe), tp.ave, tp.aae];
    let (part, n) = defined.iter().flatten().fold((0.0, 0.0), |(s, n), &e| (s + 1.0 - e.min(1.0), n + 1.0));
    (5.0 * map + part) / (5.0 + n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nds_closed_forms() {
        assert_eq!(nds(1.0, &TpErrors::ZERO), 1.0);
        assert_eq!(nds(0.0, &TpErrors::WORST), 0.0);
        let half = TpErrors { ate: 0.5, ase: 0.5, aoe: 0.5, ave: 0.5, aae: 0.5 };
        assert_eq!(nds(0.4, &half), 0.45);
    }

    #[test]
    fn partial_nds_renormalizes() {
        let all = PartialTpErrors { ate: 0.2, ase: 0.3, aoe: 0.4, ave: Some(0.5), aae: Some(0.6) };
        let full = TpErrors { ate: 0.2, ase: 0.3, aoe: 0.4, ave: 0.5, aae: 0.6 };
        assert_eq!(nds_partial(0.7, &all), nds(0.7, &full));
        let none = PartialTpErrors { ave: None, aae: None, ..all };
        assert_eq!(nds_partial(1.0, &PartialTpErrors { ate: 0.0, ase: 0.0, aoe: 0.0, ..none }), 1.0);
        assert_eq!(nds_partial(0.0, &PartialTpErrors { ate: 1.0, ase: 1.0, aoe: 1.0, ..none }), 0.0);
        assert!((nds_partial(0.5, &none) - (2.5 + 0.8 + 0.7 + 0.6) / 8.0).abs() < 1e-15);
    }

    #[test]
    fn nds_from_a_published_row() {
        // mAP 39.5 with errors 54.0 / 26.5 / 39.6 / 59.4 / 21.1 (percent).
        let tp = TpErrors { ate: 0.540, ase: 0.265, aoe: 0.396, ave: 0.594, aae: 0.211 };
        assert!((nds(0.395, &tp) - 0.497).abs() < 5e-4);
    }

    #[test]
    fn yaw_wraps() {
        assert!((yaw_difference(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert!((yaw_difference(PI / 2.0, 0.0) - PI / 2.0).abs() < 1e-15);
        assert!((yaw_difference(-PI, PI)).abs() < 1e-12);
        assert!(yaw_difference(3.0 * PI, 0.0) <= PI);
    }

    #[test]
    fn aligned_iou_cases() {
        assert_eq!(aligned_iou(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 1.0);
        assert!((aligned_iou(&[1.0, 1.0, 1.0], &[2.0, 1.0, 1.0]) - 0.5).abs() < 1e-15);
    }
}
