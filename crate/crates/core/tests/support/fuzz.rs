#![allow(dead_code)]
//! Time-boxed mutation fuzzing for the file readers. Inputs are mutated
//! from a seed corpus; any panic is a failure, any `Err` is fine.

use base64::Engine;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use robobench_core::camera::Image;
use robobench_core::depth::DepthMap;
use robobench_core::grid::LabelGrid;
use robobench_core::io::container::GridFile;
use robobench_core::io::manifest::Manifest;
use robobench_core::io::png::{decode_depth_png, decode_image, encode_depth_png, encode_image};
use robobench_core::io::pointcloud::{decode_pointcloud, encode_pointcloud};
use robobench_core::io::submission::{parse_submission_str, PathPolicy};
use robobench_core::io::gt::decode_dense;
use robobench_core::lidar::{Point, PointCloud};
use robobench_core::rng::SeededRng;
use robobench_core::{DerivedSeed, Track};

/// `ROBOBENCH_FUZZ_SECS` seconds per reader, else `default_secs`.
pub fn budget(default_secs: f64) -> Duration {
    let secs = std::env::var("ROBOBENCH_FUZZ_SECS").ok().and_then(|s| s.parse().ok()).unwrap_or(default_secs);
    Duration::from_secs_f64(secs)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FuzzStats {
    pub iterations: u64,
    pub accepted: u64,
}

const TOKENS: &[&[u8]] = &[
    b"\"", b"{", b"}", b"[", b"]", b",", b":", b"null", b"-1", b"1e999", b"NaN", b"18446744073709551616",
    b"\n", b"\\u0000", b"\"schema_version\"", b"\"samples\"", b"\"data\"", b"\"path\"", b"../",
];
const INTERESTING: &[u32] = &[0, 1, 2, 3, 4, 5, 0x7f, 0x80, 0xff, 0xffff, 0x1_0000, 0x7fff_ffff, 0xffff_ffff];

pub fn mutate(rng: &mut SeededRng, corpus: &[Vec<u8>]) -> Vec<u8> {
    let mut data = corpus[rng.below(corpus.len() as u64) as usize].clone();
    for _ in 0..1 + rng.below(4) {
        let len = data.len() as u64;
        let at = |rng: &mut SeededRng| rng.below(len + 1) as usize;
        match rng.below(9) {
            0 if len > 0 => {
                let i = rng.below(len) as usize;
                data[i] ^= 1 << rng.below(8);
            }
            1 if len > 0 => {
                let i = rng.below(len) as usize;
                data[i] = rng.below(256) as u8;
            }
            2 => {
                let i = at(rng);
                let n = rng.below(16) as usize;
                let bytes: Vec<u8> = (0..n).map(|_| rng.below(256) as u8).collect();
                data.splice(i..i, bytes);
            }
            3 if len > 0 => {
                let i = rng.below(len) as usize;
                let n = (rng.below(32) as usize).min(data.len() - i);
                data.drain(i..i + n);
            }
            4 => data.truncate(at(rng)),
            5 if len >= 4 => {
                let i = rng.below(len - 3) as usize;
                let v = INTERESTING[rng.below(INTERESTING.len() as u64) as usize];
                data[i..i + 4].copy_from_slice(&v.to_le_bytes());
            }
            6 => {
                let i = at(rng);
                let t = TOKENS[rng.below(TOKENS.len() as u64) as usize];
                data.splice(i..i, t.iter().copied());
            }
            7 if len > 1 => {
                let (a, b) = (rng.below(len) as usize, rng.below(len) as usize);
                let (lo, hi) = (a.min(b), a.max(b).min(a.min(b) + 64));
                let chunk = data[lo..hi].to_vec();
                let i = at(rng);
                data.splice(i..i, chunk);
            }
            _ => {
                let other = &corpus[rng.below(corpus.len() as u64) as usize];
                let cut = rng.below(other.len() as u64 + 1) as usize;
                data.truncate(at(rng));
                data.extend_from_slice(&other[cut..]);
            }
        }
    }
    data
}

/// Feed mutated inputs to `read` until `budget` elapses. Panics (with the
/// offending input) if the reader panics.
pub fn run(name: &str, corpus: &[Vec<u8>], budget: Duration, seed: u64, read: impl Fn(&[u8]) -> bool) -> FuzzStats {
    let mut rng = SeededRng::new(DerivedSeed(seed));
    let mut stats = FuzzStats::default();
    let start = Instant::now();
    // Each corpus entry first, unmodified.
    let mut pending: Vec<Vec<u8>> = corpus.to_vec();
    loop {
        let input = pending.pop().unwrap_or_else(|| mutate(&mut rng, corpus));
        match catch_unwind(AssertUnwindSafe(|| read(&input))) {
            Ok(ok) => stats.accepted += ok as u64,
            Err(_) => panic!(
                "{name} reader panicked on input ({} bytes): {:02x?}",
                input.len(),
                &input[..input.len().min(256)]
            ),
        }
        stats.iterations += 1;
        if pending.is_empty() && start.elapsed() >= budget {
            return stats;
        }
    }
}

pub fn manifest_corpus() -> Vec<Vec<u8>> {
    [
        r#"{"schema_version": 1, "track": "bev_detection", "classes": ["car", "pedestrian", "barrier"], "attributeless_classes": ["barrier"], "samples": [{"id": "s1", "cameras": {"front": "a.png", "back": "b.png"}, "gt": "s1.json", "corruption": "fog", "severity": 3}]}"#,
        r#"{"schema_version": 1, "track": "occupancy", "classes": ["car", "free"], "ignore_value": 255, "provenance": {"seed": 7, "params_hash": "ab"}, "samples": [{"id": "s1", "cameras": {"f": "a.png"}, "gt": "g.rbg", "corruption": "clean", "severity": 0}]}"#,
        r#"{"schema_version": 1, "track": "multimodal_detection", "classes": ["car"], "samples": [{"id": "s2", "cameras": {"f": "a.png"}, "lidar": "p.bin", "corruption": "lidar_beam_drop", "severity": 5}]}"#,
        r#"{"schema_version": 1, "track": "depth", "classes": [], "samples": [{"id": "d", "cameras": {"f": "a.png"}, "gt": "d.png", "corruption": "snow", "severity": 1}]}"#,
    ]
    .iter()
    .map(|s| s.as_bytes().to_vec())
    .collect()
}

pub fn read_manifest(bytes: &[u8]) -> bool {
    Manifest::parse(&String::from_utf8_lossy(bytes), Path::new("/nonexistent")).is_ok()
}

pub fn submission_corpus() -> Vec<Vec<u8>> {
    let grid = GridFile::from_labels(&LabelGrid::new(vec![2, 2], vec![0, 1, 255, 1], 255).unwrap()).unwrap().encode();
    let b64 = base64::engine::general_purpose::STANDARD.encode(&grid);
    [
        concat!(
            r#"{"schema_version": 1, "track": "bev_detection", "team": "t", "method": "m", "submitted_at": "2024-05-01T12:00:00Z"}"#, "\n",
            r#"{"sample_id": "s1", "translation": [1, 2, 0.5], "size": [4, 2, 1.5], "yaw": 0.3, "velocity": [1, 0], "class_name": "car", "attribute": "vehicle.moving", "score": 0.9}"#, "\n",
            r#"{"sample_id": "s1", "translation": [5, 2, 0.5], "size": [0.6, 0.6, 1.7], "yaw": -3.1, "class_name": "pedestrian", "score": 0.2}"#, "\n",
        )
        .to_string(),
        format!("{}\n{{\"sample_id\": \"s1\", \"data\": \"{b64}\"}}\n", r#"{"schema_version": 1, "track": "occupancy", "team": "t", "method": "m"}"#),
        format!("{}\n{{\"sample_id\": \"s1\", \"path\": \"p/s1.rbg\"}}\n", r#"{"schema_version": 1, "track": "depth", "team": "t", "method": "m"}"#),
    ]
    .into_iter()
    .map(String::into_bytes)
    .collect()
}

pub fn read_submission(bytes: &[u8]) -> bool {
    let text = String::from_utf8_lossy(bytes);
    let mut ok = false;
    for track in [Track::BevDetection, Track::Occupancy, Track::Depth] {
        ok |= parse_submission_str(&text, track, PathPolicy::InlineOnly).is_ok();
        ok |= parse_submission_str(&text, track, PathPolicy::RelativeTo(Path::new("/nonexistent"))).is_ok();
    }
    ok
}

pub fn png_corpus() -> Vec<Vec<u8>> {
    let img = Image::from_fn(7, 5, |x, y| [(x * 30) as u8, (y * 50) as u8, 9]);
    let depth = DepthMap::new(3, 2, vec![0.0, 1.5, 80.0, 3.25, 0.0, 255.0]).unwrap();
    vec![encode_image(&img).unwrap(), encode_depth_png(&depth).unwrap()]
}

pub fn read_png(bytes: &[u8]) -> bool {
    let a = decode_image(bytes).is_ok();
    let b = decode_depth_png(bytes).is_ok();
    let c = decode_dense(bytes).is_ok();
    a || b || c
}

pub fn pointcloud_corpus() -> Vec<Vec<u8>> {
    let pts = (0..6)
        .map(|i| Point::new(i as f32, -(i as f32), 0.5, 10.0 * i as f32, (i % 2 == 0).then_some(i as u32)))
        .collect();
    vec![encode_pointcloud(&PointCloud::new(pts).unwrap()), Vec::new()]
}

pub fn read_pointcloud(bytes: &[u8]) -> bool {
    decode_pointcloud(bytes).is_ok()
}

pub fn grid_corpus() -> Vec<Vec<u8>> {
    let labels = GridFile::from_labels(&LabelGrid::new(vec![2, 3, 2], (0..12).map(|i| i % 3).collect(), 255).unwrap());
    let depth = GridFile::from_depth(&DepthMap::new(2, 2, vec![1.0, 2.0, 0.0, 4.0]).unwrap());
    vec![labels.unwrap().encode(), depth.unwrap().encode()]
}

pub fn read_grid(bytes: &[u8]) -> bool {
    match GridFile::decode(bytes) {
        Ok(g) => {
            // Conversions must also fail cleanly on any decodable header.
            let _ = g.to_labels();
            let _ = g.to_depth();
            true
        }
        Err(_) => false,
    }
}
