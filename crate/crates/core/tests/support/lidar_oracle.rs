#![allow(dead_code)]

use std::collections::BTreeMap;

use robobench_core::lidar::{Point, PointCloud};
use robobench_core::rng::SeededRng;

/// Random cloud around the sensor; rings drawn from `0..num_beams` when set.
pub fn random_cloud(rng: &mut SeededRng, max_points: u64, num_beams: Option<u32>) -> PointCloud {
    let n = rng.below(max_points + 1) as usize;
    let points = (0..n)
        .map(|_| Point {
            x: rng.uniform_range(-50.0, 50.0) as f32,
            y: rng.uniform_range(-50.0, 50.0) as f32,
            z: rng.uniform_range(-3.0, 3.0) as f32,
            intensity: rng.uniform_range(0.0, 255.0) as f32,
            ring: num_beams.map(|b| rng.below(b as u64) as u32),
        })
        .collect();
    PointCloud::new(points).unwrap()
}

/// Window membership via the explicit interval `[c - w/2, c + w/2]`, tested
/// against the azimuth and its ±360° images.
pub fn in_window(azimuth_deg: f64, center_deg: f64, width_deg: f64) -> bool {
    let (lo, hi) = (center_deg - width_deg / 2.0, center_deg + width_deg / 2.0);
    [azimuth_deg - 360.0, azimuth_deg, azimuth_deg + 360.0].iter().any(|&a| lo <= a && a <= hi)
}

pub fn ring_histogram(pc: &PointCloud) -> BTreeMap<u32, usize> {
    let mut h = BTreeMap::new();
    for p in pc.points() {
        *h.entry(p.ring.expect("ringed cloud")).or_insert(0) += 1;
    }
    h
}

/// Whether `sub` is `full` with some points removed and the rest in order.
pub fn is_ordered_subset(sub: &[Point], full: &[Point]) -> bool {
    let mut it = full.iter();
    sub.iter().all(|p| it.any(|q| q == p))
}
