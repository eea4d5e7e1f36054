#[path = "support/lidar_oracle.rs"]
mod lidar_oracle;

use std::collections::BTreeSet;

use proptest::prelude::*;
use robobench_core::lidar::{drop_beams, drop_points, restrict_angular, AngularWindow, BeamDropOptions, BeamSelection};
use robobench_core::rng::SeededRng;
use robobench_core::{DerivedSeed, Error};

use lidar_oracle::{in_window, is_ordered_subset, random_cloud, ring_histogram};

const BEAMS: u32 = 32;

fn opts() -> BeamDropOptions {
    BeamDropOptions { num_beams: BEAMS, infer_missing_rings: false }
}

#[test]
fn every_failure_keeps_an_ordered_subset() {
    let mut rng = SeededRng::new(DerivedSeed(0x11DA));
    for case in 0..1000u64 {
        let pc = random_cloud(&mut rng, 200, Some(BEAMS));
        let seed = DerivedSeed(case);
        let w = AngularWindow::new(rng.uniform_range(-720.0, 720.0), rng.uniform_range(1.0, 360.0)).unwrap();
        let outs = [
            drop_points(&pc, rng.uniform(), seed).unwrap(),
            restrict_angular(&pc, &w),
            drop_beams(&pc, &BeamSelection::RandomCount(rng.below(BEAMS as u64 + 1) as usize), &opts(), seed).unwrap(),
        ];
        for out in &outs {
            assert!(is_ordered_subset(out.points(), pc.points()), "case {case}");
        }
    }
}

#[test]
fn restrict_angular_matches_predicate_oracle() {
    let mut rng = SeededRng::new(DerivedSeed(0xA46));
    for case in 0..500 {
        let pc = random_cloud(&mut rng, 300, None);
        let (c, w) = (rng.uniform_range(-400.0, 400.0), rng.uniform_range(0.5, 360.0));
        let out = restrict_angular(&pc, &AngularWindow::new(c, w).unwrap());
        let want: Vec<_> =
            pc.points().iter().filter(|p| in_window(p.azimuth_deg(), c.rem_euclid(360.0), w)).copied().collect();
        assert_eq!(out.points(), &want[..], "case {case}: center {c} width {w}");
    }
}

#[test]
fn full_window_keeps_everything() {
    let mut rng = SeededRng::new(DerivedSeed(3));
    let pc = random_cloud(&mut rng, 500, None);
    assert_eq!(restrict_angular(&pc, &AngularWindow::new(17.0, 360.0).unwrap()), pc);
}

#[test]
fn drop_points_count_is_binomial() {
    let mut rng = SeededRng::new(DerivedSeed(0xB10));
    let pc = random_cloud(&mut rng, 0, None);
    assert!(pc.is_empty());
    let n = 5000u64;
    let pc = loop {
        let pc = random_cloud(&mut rng, n, None);
        if pc.len() as u64 > n / 2 {
            break pc;
        }
    };
    let n = pc.len() as f64;
    for rate in [0.1, 0.5, 0.9] {
        let (mean, sd) = (n * (1.0 - rate), (n * rate * (1.0 - rate)).sqrt());
        for trial in 0..100u64 {
            let kept = drop_points(&pc, rate, DerivedSeed(trial * 7919 + 1)).unwrap().len() as f64;
            assert!((kept - mean).abs() <= 5.0 * sd, "rate {rate} trial {trial}: kept {kept}, mean {mean}");
        }
    }
}

#[test]
fn drop_beams_matches_ring_histogram() {
    let mut rng = SeededRng::new(DerivedSeed(0xBEA));
    for case in 0..300 {
        let pc = random_cloud(&mut rng, 400, Some(BEAMS));
        let dropped: BTreeSet<u32> = (0..BEAMS).filter(|_| rng.coin()).collect();
        let out = drop_beams(&pc, &BeamSelection::Explicit(dropped.clone()), &opts(), DerivedSeed(0)).unwrap();
        let mut want = ring_histogram(&pc);
        want.retain(|r, _| !dropped.contains(r));
        assert_eq!(ring_histogram(&out), want, "case {case}");
    }
}

#[test]
fn drop_beams_needs_rings() {
    let mut rng = SeededRng::new(DerivedSeed(5));
    let pc = loop {
        let pc = random_cloud(&mut rng, 50, None);
        if !pc.is_empty() {
            break pc;
        }
    };
    let sel = BeamSelection::Explicit([1].into());
    assert!(matches!(drop_beams(&pc, &sel, &opts(), DerivedSeed(0)), Err(Error::RingAbsent)));
}

proptest! {
    #[test]
    fn restrict_is_idempotent(seed in any::<u64>(), c in -720.0f64..720.0, w in 0.1f64..=360.0) {
        let pc = random_cloud(&mut SeededRng::new(DerivedSeed(seed)), 200, None);
        let win = AngularWindow::new(c, w).unwrap();
        let once = restrict_angular(&pc, &win);
        prop_assert_eq!(restrict_angular(&once, &win), once);
    }

    #[test]
    fn restrict_and_beam_drop_commute(seed in any::<u64>(), c in 0.0f64..360.0, w in 0.1f64..=360.0, mask in any::<u32>()) {
        let pc = random_cloud(&mut SeededRng::new(DerivedSeed(seed)), 200, Some(BEAMS));
        let win = AngularWindow::new(c, w).unwrap();
        let sel = BeamSelection::Explicit((0..BEAMS).filter(|b| mask >> b & 1 == 1).collect());
        let a = drop_beams(&restrict_angular(&pc, &win), &sel, &opts(), DerivedSeed(0)).unwrap();
        let b = restrict_angular(&drop_beams(&pc, &sel, &opts(), DerivedSeed(0)).unwrap(), &win);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn drop_points_is_deterministic_and_bounded(seed in any::<u64>(), rate in 0.0f64..=1.0) {
        let pc = random_cloud(&mut SeededRng::new(DerivedSeed(seed)), 200, None);
        let a = drop_points(&pc, rate, DerivedSeed(seed ^ 1)).unwrap();
        prop_assert_eq!(&a, &drop_points(&pc, rate, DerivedSeed(seed ^ 1)).unwrap());
        if rate == 0.0 { prop_assert_eq!(&a, &pc); }
        if rate == 1.0 { prop_assert!(a.is_empty()); }
    }
}
