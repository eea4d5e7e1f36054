//! Average precision as the exact area under the interpolated PR curve.
//!
//! The curve passes through the (recall, precision) point of every ranked
//! prediction in order, linearly between consecutive points, holds the first
//! precision to the left of the first point and is zero past the final
//! recall. Only the part above the precision floor and right of the recall
//! floor counts, renormalized so a perfect detector scores 1.

/// `hits` are the ranked predictions' match flags. `None` when `num_gt` is 0.
pub fn average_precision(hits: &[bool], num_gt: usize, min_recall: f64, min_precision: f64) -> Option<f64> {
    if num_gt == 0 {
        return None;
    }
    if hits.is_empty() {
        return Some(0.0);
    }
    let npos = num_gt as f64;
    let mut points = Vec::with_capacity(hits.len());
    let mut tp = 0usize;
    for (i, &hit) in hits.iter().enumerate() {
        tp += hit as usize;
        points.push((tp as f64 / npos, tp as f64 / (i + 1) as f64));
    }

    // Integrate the shortfall from a perfect curve rather than the area
    // itself so that perfect rankings score exactly 1.
    let ceiling = 1.0 - min_precision;
    let lift = |p: f64| p - min_precision;
    let shortfall = |a: f64, fa: f64, b: f64, fb: f64| ceiling * (b - a) - positive_area(a, fa, b, fb);
    let mut deficit = 0.0;
    let (r0, p0) = points[0];
    if r0 > min_recall {
        deficit += shortfall(min_recall, lift(p0), r0, lift(p0));
    }
    for w in points.windows(2) {
        let ((ra, pa), (rb, pb)) = (w[0], w[1]);
        if rb <= ra || rb <= min_recall {
            continue;
        }
        let lo = ra.max(min_recall);
        let at = |r: f64| pa + (pb - pa) * (r - ra) / (rb - ra);
        deficit += shortfall(lo, lift(at(lo)), rb, lift(pb));
    }
    let r_last = points[points.len() - 1].0.max(min_recall);
    if r_last < 1.0 {
        deficit += ceiling * (1.0 - r_last);
    }
    let ap = 1.0 - deficit / ((1.0 - min_recall) * ceiling);
    Some(ap.clamp(0.0, 1.0))
}

/// Integral of max(0, f) for f linear from (a, fa) to (b, fb).
fn positive_area(a: f64, fa: f64, b: f64, fb: f64) -> f64 {
    let w = b - a;
    if fa >= 0.0 && fb >= 0.0 {
        0.5 * (fa + fb) * w
    } else if fa <= 0.0 && fb <= 0.0 {
        0.0
    } else if fa > 0.0 {
        0.5 * w * fa * fa / (fa - fb)
    } else {
        0.5 * w * fb * fb / (fb - fa)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const F: f64 = 0.1;

    #[test]
    fn perfect_detector_scores_one() {
        for n in 1..20 {
            assert_eq!(average_precision(&vec![true; n], n, F, F), Some(1.0));
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(average_precision(&[], 3, F, F), Some(0.0));
        assert_eq!(average_precision(&[false, false], 3, F, F), Some(0.0));
        assert_eq!(average_precision(&[true], 0, F, F), None);
    }

    #[test]
    fn hand_computed_curve() {
        // Points (0.5, 1), (0.5, 0.5), (1, 2/3). Above the 0.1 floor:
        // [0.1, 0.5] at 0.9 -> 0.36; [0.5, 1] linear 0.4 -> 0.5667 -> 0.24167.
        let ap = average_precision(&[true, false, true], 2, F, F).unwrap();
        let expected = (0.4 * 0.9 + 0.5 * 0.5 * (0.4 + (2.0 / 3.0 - 0.1))) / 0.81;
        assert!((ap - expected).abs() < 1e-15, "{ap} vs {expected}");
    }

    #[test]
    fn half_recall_without_false_positives() {
        // Precision 1 up to recall 0.5, zero beyond.
        let ap = average_precision(&[true], 2, F, F).unwrap();
        assert!((ap - 0.4 * 0.9 / 0.81).abs() < 1e-15);
    }

    #[test]
    fn crossing_the_precision_floor() {
        let a = positive_area(0.0, 1.0, 1.0, -1.0);
        assert!((a - 0.25).abs() < 1e-15);
        let b = positive_area(0.0, -1.0, 2.0, 1.0);
        assert!((b - 0.5).abs() < 1e-15);
    }
}
