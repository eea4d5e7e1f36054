use std::collections::HashMap;

use super::{DetBox, GtBox};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub pred: usize,
    pub gt: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchResult {
    /// Predictions of the class in descending score order, each with its
    /// match (if any). Drives the precision/recall curve.
    pub ranked: Vec<(usize, Option<Match>)>,
    pub unmatched_gts: Vec<usize>,
}

impl MatchResult {
    pub fn matches(&self) -> impl Iterator<Item = &Match> {
        self.ranked.iter().filter_map(|(_, m)| m.as_ref())
    }

    pub fn unmatched_preds(&self) -> impl Iterator<Item = usize> + '_ {
        self.ranked.iter().filter(|(_, m)| m.is_none()).map(|(p, _)| *p)
    }

    pub fn hits(&self) -> Vec<bool> {
        self.ranked.iter().map(|(_, m)| m.is_some()).collect()
    }
}

pub(crate) fn planar_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    (dx * dx + dy * dy).sqrt()
}

/// Greedy matching for one class: predictions are visited in descending score
/// order (input order on ties) and each takes the nearest still-unmatched GT
/// of the same class and sample, provided it lies within `d` metres in the
/// ground plane. Equidistant GTs resolve to the earlier one.
pub fn match_boxes(preds: &[DetBox], gts: &[GtBox], class: &str, d: f64) -> MatchResult {
    let mut by_sample: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, g) in gts.iter().enumerate() {
        if g.class_name == class {
            by_sample.entry(g.sample_id.as_str()).or_default().push(i);
        }
    }
    let mut order: Vec<usize> = (0..preds.len()).filter(|&i| preds[i].class_name == class).collect();
    order.sort_by(|&a, &b| preds[b].score.total_cmp(&preds[a].score));

    let mut taken = vec![false; gts.len()];
    let ranked = order
        .into_iter()
        .map(|p| {
            let pred = &preds[p];
            let mut best: Option<Match> = None;
            for &g in by_sample.get(pred.sample_id.as_str()).map(Vec::as_slice).unwrap_or(&[]) {
                if taken[g] {
                    continue;
                }
                let distance = planar_distance(&pred.translation, &gts[g].translation);
                if best.is_none_or(|b| distance < b.distance) {
                    best = Some(Match { pred: p, gt: g, distance });
                }
            }
            let hit = best.filter(|m| m.distance <= d);
            if let Some(m) = hit {
                taken[m.gt] = true;
            }
            (p, hit)
        })
        .collect();
    let unmatched_gts = gts
        .iter()
        .enumerate()
        .filter(|(i, g)| g.class_name == class && !taken[*i])
        .map(|(i, _)| i)
        .collect();
    MatchResult { ranked, unmatched_gts }
}
