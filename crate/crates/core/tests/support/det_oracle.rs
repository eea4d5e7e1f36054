//! Brute-force detection scorer used as a reference in tests.
//!
//! Deliberately naive: selection-sort ranking, exhaustive nearest-GT search,
//! and numerical integration of the precision/recall curve evaluated point by
//! point. Shares nothing with the library beyond the box types.

#![allow(dead_code)]

use std::f64::consts::PI;

use robobench_core::detection::{DetBox, GtBox};

pub struct OracleResult {
    pub map: f64,
    /// ATE, ASE, AOE, AVE, AAE; `None` where no scored class reports it.
    pub tp: [Option<f64>; 5],
    pub nds: f64,
}

pub struct OracleConfig {
    pub thresholds: Vec<f64>,
    pub tp_threshold: f64,
    pub min_recall: f64,
    pub min_precision: f64,
    /// Classes without velocity or attribute errors.
    pub attributeless: Vec<String>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            thresholds: vec![0.5, 1.0, 2.0, 4.0],
            tp_threshold: 2.0,
            min_recall: 0.1,
            min_precision: 0.1,
            attributeless: Vec::new(),
        }
    }
}

/// Indices of the class's predictions, highest score first, earlier index on ties.
fn ranked(preds: &[DetBox], class: &str) -> Vec<usize> {
    let mut left: Vec<usize> = (0..preds.len()).filter(|&i| preds[i].class_name == class).collect();
    let mut out = Vec::new();
    while !left.is_empty() {
        let mut best = 0;
        for k in 1..left.len() {
            if preds[left[k]].score > preds[left[best]].score {
                best = k;
            }
        }
        out.push(left.remove(best));
    }
    out
}

fn planar(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// (pred index, matched gt index) in ranking order.
fn greedy(preds: &[DetBox], gts: &[GtBox], class: &str, d: f64) -> Vec<(usize, Option<usize>)> {
    let mut taken = vec![false; gts.len()];
    let mut out = Vec::new();
    for p in ranked(preds, class) {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if taken[g] || gt.class_name != class || gt.sample_id != preds[p].sample_id {
                continue;
            }
            let dist = planar(&preds[p].translation, &gt.translation);
            if best.is_none_or(|(_, bd)| dist < bd) {
                best = Some((g, dist));
            }
        }
        match best {
            Some((g, dist)) if dist <= d => {
                taken[g] = true;
                out.push((p, Some(g)));
            }
            _ => out.push((p, None)),
        }
    }
    out
}

/// Precision at recall `x`, interpolating through the PR points in order.
fn curve_at(points: &[(f64, f64)], x: f64) -> f64 {
    if x < points[0].0 {
        return points[0].1;
    }
    let last = points.len() - 1;
    if x > points[last].0 {
        return 0.0;
    }
    let mut j = 0;
    for (k, pt) in points.iter().enumerate() {
        if pt.0 <= x {
            j = k;
        }
    }
    if j == last {
        return points[last].1;
    }
    let (r0, p0) = points[j];
    let (r1, p1) = points[j + 1];
    p0 + (p1 - p0) * (x - r0) / (r1 - r0)
}

fn ap(flags: &[bool], npos: usize, mr: f64, mp: f64) -> f64 {
    if flags.is_empty() {
        return 0.0;
    }
    let mut points = Vec::new();
    let mut tp = 0usize;
    for (i, &hit) in flags.iter().enumerate() {
        if hit {
            tp += 1;
        }
        points.push((tp as f64 / npos as f64, tp as f64 / (i + 1) as f64));
    }
    // Panels between every recall breakpoint, split again wherever the
    // curve crosses the precision floor (found by bisection).
    let mut edges = vec![mr, 1.0];
    edges.extend(points.iter().map(|p| p.0).filter(|&r| r > mr && r < 1.0));
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let g = |x: f64| curve_at(&points, x) - mp;
    let mut area = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let mut sub = vec![a, b];
        let (eps, fa, fb) = ((b - a) * 1e-12, g(a + (b - a) * 1e-9), g(b - (b - a) * 1e-9));
        if fa.signum() != fb.signum() && fa != 0.0 && fb != 0.0 {
            let (mut lo, mut hi) = (a, b);
            while hi - lo > eps {
                let mid = 0.5 * (lo + hi);
                if g(mid).signum() == fa.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            sub.insert(1, 0.5 * (lo + hi));
        }
        for s in sub.windows(2) {
            let m = 64;
            let h = (s[1] - s[0]) / m as f64;
            for k in 0..m {
                let x = s[0] + (k as f64 + 0.5) * h;
                area += g(x).max(0.0) * h;
            }
        }
    }
    area / ((1.0 - mr) * (1.0 - mp))
}

fn yaw_diff(a: f64, b: f64) -> f64 {
    let mut d = (a - b).abs();
    while d > 2.0 * PI {
        d -= 2.0 * PI;
    }
    if d > PI {
        2.0 * PI - d
    } else {
        d
    }
}

fn aligned_iou(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let inter = a[0].min(b[0]) * a[1].min(b[1]) * a[2].min(b[2]);
    let union = a[0] * a[1] * a[2] + b[0] * b[1] * b[2] - inter;
    inter / union
}

pub fn score(preds: &[DetBox], gts: &[GtBox], classes: &[&str], cfg: &OracleConfig) -> Option<OracleResult> {
    let mut aps = Vec::new();
    let mut tp_sum = [0.0; 5];
    let mut tp_count = [0usize; 5];
    let mut present = 0usize;
    for &class in classes {
        let npos = gts.iter().filter(|g| g.class_name == class).count();
        if npos == 0 {
            continue;
        }
        present += 1;
        let metrics = if cfg.attributeless.iter().any(|c| c == class) { 3 } else { 5 };
        for c in tp_count.iter_mut().take(metrics) {
            *c += 1;
        }
        for &d in &cfg.thresholds {
            let flags: Vec<bool> = greedy(preds, gts, class, d).iter().map(|m| m.1.is_some()).collect();
            aps.push(ap(&flags, npos, cfg.min_recall, cfg.min_precision));
        }
        let pairs: Vec<(usize, usize)> = greedy(preds, gts, class, cfg.tp_threshold)
            .into_iter()
            .filter_map(|(p, g)| g.map(|g| (p, g)))
            .collect();
        if pairs.is_empty() {
            for t in tp_sum.iter_mut().take(metrics) {
                *t += 1.0;
            }
            continue;
        }
        let n = pairs.len() as f64;
        let mut e = [0.0; 5];
        for &(p, g) in &pairs {
            let (p, g) = (&preds[p], &gts[g]);
            e[0] += planar(&p.translation, &g.translation);
            e[1] += 1.0 - aligned_iou(&p.size, &g.size);
            e[2] += yaw_diff(p.yaw, g.yaw);
            e[3] += ((p.velocity[0] - g.velocity[0]).powi(2) + (p.velocity[1] - g.velocity[1]).powi(2)).sqrt();
            e[4] += if p.attribute == g.attribute { 0.0 } else { 1.0 };
        }
        for k in 0..metrics {
            tp_sum[k] += e[k] / n;
        }
    }
    if present == 0 {
        return None;
    }
    let map = aps.iter().sum::<f64>() / aps.len() as f64;
    let mut tp = [None; 5];
    for k in 0..5 {
        if tp_count[k] > 0 {
            tp[k] = Some(tp_sum[k] / tp_count[k] as f64);
        }
    }
    // Undefined terms drop out and the weights renormalize.
    let defined: Vec<f64> = tp.iter().flatten().copied().collect();
    let nds = (5.0 * map + defined.iter().map(|&t| 1.0 - t.min(1.0)).sum::<f64>()) / (5.0 + defined.len() as f64);
    Some(OracleResult { map, tp, nds })
}

/// Random instance: up to 5 samples, 2 classes, 10 GT and 10 predicted boxes
/// per sample. Predictions are jittered copies of GT mixed with clutter;
/// scores are coarsely quantized so ties occur.
pub fn random_instance(rng: &mut robobench_core::rng::SeededRng) -> (Vec<DetBox>, Vec<GtBox>) {
    use robobench_core::SampleId;
    const CLASSES: [&str; 2] = ["car", "pedestrian"];
    const ATTRS: [Option<&str>; 3] = [None, Some("moving"), Some("parked")];
    let pick_attr = |rng: &mut robobench_core::rng::SeededRng| ATTRS[rng.below(3) as usize].map(String::from);
    let num_samples = 1 + rng.below(5) as usize;
    let num_classes = 1 + rng.below(2) as usize;
    let mut gts = Vec::new();
    let mut preds = Vec::new();
    for s in 0..num_samples {
        let sample_id = SampleId::new(format!("s{s}")).unwrap();
        let n_gt = rng.below(11) as usize;
        let first_gt = gts.len();
        for _ in 0..n_gt {
            gts.push(GtBox {
                sample_id: sample_id.clone(),
                translation: [rng.uniform_range(0.0, 12.0), rng.uniform_range(0.0, 12.0), rng.uniform_range(-1.0, 1.0)],
                size: [rng.uniform_range(0.5, 3.0), rng.uniform_range(0.5, 5.0), rng.uniform_range(0.5, 2.5)],
                yaw: rng.uniform_range(-PI, PI),
                velocity: [rng.uniform_range(-2.0, 2.0), rng.uniform_range(-2.0, 2.0)],
                class_name: CLASSES[rng.below(num_classes as u64) as usize].into(),
                attribute: pick_attr(rng),
            });
        }
        let n_pred = rng.below(11) as usize;
        for _ in 0..n_pred {
            let score = (rng.below(11) as f64) / 10.0;
            let copy = n_gt > 0 && rng.uniform() < 0.7;
            let b = if copy {
                let g = &gts[first_gt + rng.below(n_gt as u64) as usize];
                let jitter = rng.uniform_range(0.0, 3.0);
                DetBox {
                    sample_id: sample_id.clone(),
                    translation: [
                        g.translation[0] + jitter * rng.uniform_range(-1.0, 1.0),
                        g.translation[1] + jitter * rng.uniform_range(-1.0, 1.0),
                        g.translation[2],
                    ],
                    size: g.size.map(|v| v * rng.uniform_range(0.7, 1.3)),
                    yaw: g.yaw + rng.uniform_range(-1.0, 1.0),
                    velocity: g.velocity.map(|v| v + rng.uniform_range(-1.0, 1.0)),
                    class_name: if rng.uniform() < 0.9 { g.class_name.clone() } else { CLASSES[rng.below(num_classes as u64) as usize].into() },
                    attribute: if rng.uniform() < 0.7 { g.attribute.clone() } else { pick_attr(rng) },
                    score,
                }
            } else {
                DetBox {
                    sample_id: sample_id.clone(),
                    translation: [rng.uniform_range(0.0, 12.0), rng.uniform_range(0.0, 12.0), 0.0],
                    size: [rng.uniform_range(0.5, 3.0), rng.uniform_range(0.5, 5.0), rng.uniform_range(0.5, 2.5)],
                    yaw: rng.uniform_range(-PI, PI),
                    velocity: [0.0, 0.0],
                    class_name: CLASSES[rng.below(num_classes as u64) as usize].into(),
                    attribute: None,
                    score,
                }
            };
            preds.push(b);
        }
    }
    (preds, gts)
}
