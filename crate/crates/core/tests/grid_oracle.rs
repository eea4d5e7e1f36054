#[path = "support/grid_oracle.rs"]
mod grid_oracle;

use proptest::prelude::*;
use robobench_core::grid::{iou_per_class, miou, ConfusionMatrix, LabelGrid};
use robobench_core::rng::SeededRng;
use robobench_core::DerivedSeed;

use grid_oracle::{random_pair, IGNORE};

#[test]
fn matches_counting_oracle_exactly() {
    let mut rng = SeededRng::new(DerivedSeed(0x6B1D));
    for case in 0..500 {
        let (pred, gt, k) = random_pair(&mut rng);
        let mut cm = ConfusionMatrix::new(k);
        cm.accumulate(&pred, &gt).unwrap();
        assert_eq!(iou_per_class(&cm), grid_oracle::iou(pred.labels(), gt.labels(), k), "case {case}");
        let all: Vec<usize> = (0..k).collect();
        let want = grid_oracle::miou(pred.labels(), gt.labels(), k, &all);
        assert_eq!(miou(&cm, &all).ok(), want, "case {case}");
    }
}

fn grid_pair() -> impl Strategy<Value = (Vec<usize>, Vec<u32>, Vec<u32>, usize)> {
    (1usize..=6, prop::collection::vec(1usize..=8, 2..=3)).prop_flat_map(|(k, dims)| {
        let n = dims.iter().product::<usize>();
        let label = prop_oneof![4 => 0..k as u32, 1 => Just(IGNORE)];
        (Just(dims), prop::collection::vec(label.clone(), n), prop::collection::vec(label, n), Just(k))
    })
}

proptest! {
    #[test]
    fn counts_partition_non_ignored_cells((dims, p, g, k) in grid_pair()) {
        let scored = g.iter().filter(|&&l| l != IGNORE).count() as u64;
        let pred = LabelGrid::new(dims.clone(), p, IGNORE).unwrap();
        let gt = LabelGrid::new(dims, g, IGNORE).unwrap();
        let mut cm = ConfusionMatrix::new(k);
        cm.accumulate(&pred, &gt).unwrap();
        prop_assert_eq!(cm.total(), scored);
        let by_class: u64 = (0..k).map(|c| cm.gt_count(c)).sum();
        prop_assert_eq!(by_class, scored);
        for v in iou_per_class(&cm).into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn merging_equals_accumulating_together((dims, p, g, k) in grid_pair()) {
        let pred = LabelGrid::new(dims.clone(), p, IGNORE).unwrap();
        let gt = LabelGrid::new(dims, g, IGNORE).unwrap();
        let mut twice = ConfusionMatrix::new(k);
        twice.accumulate(&pred, &gt).unwrap();
        twice.accumulate(&pred, &gt).unwrap();
        let mut once = ConfusionMatrix::new(k);
        once.accumulate(&pred, &gt).unwrap();
        let mut merged = once.clone();
        merged.merge(&once).unwrap();
        prop_assert_eq!(&merged, &twice);
        // Doubling every count leaves every IoU unchanged.
        prop_assert_eq!(iou_per_class(&twice), iou_per_class(&once));
    }

    #[test]
    fn perfect_prediction_scores_one((dims, _p, g, k) in grid_pair()) {
        let gt = LabelGrid::new(dims, g, IGNORE).unwrap();
        let mut cm = ConfusionMatrix::new(k);
        cm.accumulate(&gt, &gt).unwrap();
        let all: Vec<usize> = (0..k).collect();
        match miou(&cm, &all) {
            Ok(v) => prop_assert_eq!(v, 1.0),
            Err(_) => prop_assert!(gt.labels().iter().all(|&l| l == IGNORE)),
        }
    }
}
