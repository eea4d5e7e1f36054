#![allow(dead_code)]
//! Procedural camera images standing in for real frames. Edges sit at
//! varied, mostly odd offsets so block-based corruptions see them at
//! arbitrary alignments, as in real frames.

use robobench_core::camera::Image;
use robobench_core::rng::SeededRng;
use robobench_core::DerivedSeed;

/// Ten 96×64 scenes: sky/road gradients, boxes, texture noise and a few
/// saturated pixels, each varied by index.
pub fn camera_images() -> Vec<Image> {
    (0..10u32)
        .map(|i| {
            let mut rng = SeededRng::new(DerivedSeed(0xF1C7 + i as u64));
            let noise: Vec<u8> = (0..96 * 64).map(|_| rng.below(24) as u8).collect();
            let (bx, by) = (11 + 7 * i, 33 + (i % 4) * 5);
            let horizon = 23 + (i * 3) % 7;
            Image::from_fn(96, 64, |x, y| {
                let t = noise[(y * 96 + x) as usize];
                if (bx..bx + 20).contains(&x) && (by..by + 14).contains(&y) {
                    [200 - 10 * i as u8, 40 + t, 30 + 9 * i as u8]
                } else if y < horizon {
                    [90 + y as u8 * 2, 140 + y as u8 * 3, 220 - i as u8]
                } else if x == 3 * i && y % 3 == 0 {
                    [255, 255, 255]
                } else {
                    let g = 60 + (y - horizon) as u8 * 2 + t;
                    [g, g, g + 5]
                }
            })
        })
        .collect()
}
