//! Synthetic datasets and submissions for every track, used by benchmarks
//! and end-to-end tests. Everything is a pure function of the seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use robobench_core::camera::Image;
use robobench_core::corruption::{CorruptionType, Severity};
use robobench_core::depth::DepthMap;
use robobench_core::detection::{DetBox, GtBox};
use robobench_core::grid::LabelGrid;
use robobench_core::io::container::GridFile;
use robobench_core::io::gt::{read_dense, read_gt_boxes, DenseData};
use robobench_core::io::manifest::{Manifest, Sample, MANIFEST_SCHEMA_VERSION};
use robobench_core::io::png::{encode_depth_png, write_image};
use robobench_core::io::pointcloud::write_pointcloud;
use robobench_core::io::submission::{
    write_submission_str, DenseRecord, DenseSource, Predictions, SubmissionHeader, SUBMISSION_SCHEMA_VERSION,
};
use robobench_core::lidar::{Point, PointCloud};
use robobench_core::rng::SeededRng;
use robobench_core::{DerivedSeed, Error, Result, SampleId, Track};

pub const CAMERA: &str = "front";
pub const IMAGE_SIZE: (u32, u32) = (64, 48);
pub const GRID_DIMS_3D: [usize; 3] = [12, 12, 4];
pub const GRID_DIMS_2D: [usize; 2] = [24, 24];
pub const DEPTH_SIZE: (u32, u32) = (32, 24);
pub const IGNORE: u32 = 255;

/// A dataset written under `root`, with its manifest at `manifest_path`.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub root: PathBuf,
    pub manifest_path: PathBuf,
    pub manifest: Manifest,
}

fn classes(track: Track) -> (Vec<&'static str>, Option<&'static str>, Option<&'static str>, Vec<&'static str>) {
    match track {
        Track::BevDetection | Track::MultimodalDetection => (vec!["car", "pedestrian", "barrier"], None, None, vec!["barrier"]),
        Track::MapSegmentation => (vec!["background", "road", "lane", "crossing"], None, Some("background"), vec![]),
        Track::Occupancy => (vec!["car", "road", "vegetation", "free"], Some("free"), None, vec![]),
        Track::Depth => (vec![], None, None, vec![]),
    }
}

pub fn image(rng: &mut SeededRng) -> Image {
    let (w, h) = IMAGE_SIZE;
    let horizon = 16 + rng.below(12) as u32;
    let (bx, by) = (rng.below(40) as u32, horizon + rng.below(10) as u32);
    let tint = rng.below(60) as u8;
    let noise: Vec<u8> = (0..w * h).map(|_| rng.below(20) as u8).collect();
    Image::from_fn(w, h, |x, y| {
        let t = noise[(y * w + x) as usize];
        if (bx..bx + 18).contains(&x) && (by..by + 10).contains(&y) {
            [180 + t, 30 + tint, 40]
        } else if y < horizon {
            [100 + tint + (y as u8), 150 + (y as u8) * 2, 230 - t]
        } else {
            let g = 70 + (y - horizon) as u8 + t;
            [g, g, g]
        }
    })
}

pub fn cloud(rng: &mut SeededRng) -> PointCloud {
    let mut points = Vec::new();
    for ring in 0..16u32 {
        let elev = (-25.0 + ring as f64 * 2.5).to_radians();
        for step in 0..60 {
            let az = (step as f64 * 6.0 + rng.uniform()).to_radians();
            let r = rng.uniform_range(5.0, 60.0);
            points.push(Point {
                x: (r * elev.cos() * az.cos()) as f32,
                y: (r * elev.cos() * az.sin()) as f32,
                z: (r * elev.sin()) as f32,
                intensity: rng.uniform_range(0.0, 255.0) as f32,
                ring: Some(ring),
            });
        }
    }
    PointCloud::new(points).expect("finite points")
}

fn boxes(rng: &mut SeededRng, id: &SampleId) -> Vec<GtBox> {
    let n = 1 + rng.below(5) as usize;
    (0..n)
        .map(|_| {
            let (class, size, attr): (&str, [f64; 3], Option<&str>) = match rng.below(3) {
                0 => ("car", [1.9, 4.5, 1.6], Some(if rng.coin() { "vehicle.moving" } else { "vehicle.parked" })),
                1 => ("pedestrian", [0.7, 0.7, 1.8], Some("pedestrian.moving")),
                _ => ("barrier", [2.5, 0.5, 1.0], None),
            };
            GtBox {
                sample_id: id.clone(),
                translation: [rng.uniform_range(-40.0, 40.0), rng.uniform_range(-40.0, 40.0), 0.8],
                size,
                yaw: rng.uniform_range(-3.1, 3.1),
                velocity: if attr.is_some() { [rng.uniform_range(-5.0, 5.0), rng.uniform_range(-5.0, 5.0)] } else { [0.0, 0.0] },
                class_name: class.into(),
                attribute: attr.map(String::from),
            }
        })
        .collect()
}

fn label_grid(rng: &mut SeededRng, dims: Vec<usize>, k: u32) -> LabelGrid {
    let n: usize = dims.iter().product();
    // Blocky regions so that classes have spatial extent, plus ignore cells.
    let base: Vec<u32> = (0..n / 4 + 1).map(|_| rng.below(k as u64) as u32).collect();
    let labels = (0..n).map(|i| if rng.uniform() < 0.05 { IGNORE } else { base[i / 4] }).collect();
    LabelGrid::new(dims, labels, IGNORE).expect("valid grid")
}

fn depth(rng: &mut SeededRng) -> DepthMap {
    let (w, h) = DEPTH_SIZE;
    let far = rng.uniform_range(30.0, 70.0);
    let values = (0..w * h)
        .map(|i| {
            let y = (i / w) as f64;
            if rng.uniform() < 0.1 {
                0.0
            } else {
                // Quantized to the 1/256 m PNG step so files round-trip exactly.
                let d = far - y * (far - 2.0) / h as f64 + rng.uniform_range(-0.5, 0.5);
                (d * 256.0).round() / 256.0
            }
        })
        .collect();
    DepthMap::new(w, h, values).expect("valid depth map")
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

/// The corruption of the `i`th sample: cycles through the track's
/// corruptions plus clean, with severities 1..=5.
pub fn assignment(track: Track, i: usize) -> (CorruptionType, Severity) {
    let mut tags = track.corruptions();
    tags.push(CorruptionType::Clean);
    let c = tags[i % tags.len()];
    let s = if c == CorruptionType::Clean { 0 } else { 1 + ((i / tags.len() + i) % 5) as u8 };
    (c, Severity::new(s).expect("valid severity"))
}

/// Write a clean dataset of `samples` samples for `track` under `root`.
pub fn build(root: &Path, track: Track, samples: usize, seed: u64) -> Result<Synthetic> {
    let mut rng = SeededRng::new(DerivedSeed(seed));
    let (class_names, empty, background, attributeless) = classes(track);
    let k = class_names.len() as u32;
    for d in ["cameras", "lidar", "gt"] {
        let p = root.join(d);
        std::fs::create_dir_all(&p).map_err(io_err(&p))?;
    }
    let mut out = Vec::with_capacity(samples);
    for i in 0..samples {
        let id = SampleId::new(format!("s{i:03}"))?;
        let (corruption, severity) = assignment(track, i);
        let cam = root.join("cameras").join(format!("{id}.png"));
        write_image(&image(&mut rng), &cam)?;
        let lidar = if track.uses_lidar() {
            let p = root.join("lidar").join(format!("{id}.bin"));
            write_pointcloud(&cloud(&mut rng), &p)?;
            Some(p)
        } else {
            None
        };
        let gt = match track {
            Track::BevDetection | Track::MultimodalDetection => {
                let p = root.join("gt").join(format!("{id}.jsonl"));
                let text: String = boxes(&mut rng, &id)
                    .iter()
                    .map(|b| serde_json::to_string(b).expect("boxes serialize") + "\n")
                    .collect();
                std::fs::write(&p, text).map_err(io_err(&p))?;
                p
            }
            Track::MapSegmentation | Track::Occupancy => {
                let dims = if track == Track::Occupancy { GRID_DIMS_3D.to_vec() } else { GRID_DIMS_2D.to_vec() };
                let p = root.join("gt").join(format!("{id}.rbg"));
                let file = GridFile::from_labels(&label_grid(&mut rng, dims, k))?;
                std::fs::write(&p, file.encode()).map_err(io_err(&p))?;
                p
            }
            Track::Depth => {
                let p = root.join("gt").join(format!("{id}.png"));
                std::fs::write(&p, encode_depth_png(&depth(&mut rng))?).map_err(io_err(&p))?;
                p
            }
        };
        out.push(Sample {
            id,
            cameras: BTreeMap::from([(CAMERA.to_string(), cam)]),
            lidar,
            gt: Some(gt),
            corruption,
            severity,
        });
    }
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        track,
        classes: class_names.iter().map(|s| s.to_string()).collect(),
        empty_class: empty.map(String::from),
        background_class: background.map(String::from),
        ignore_value: IGNORE,
        attributeless_classes: attributeless.iter().map(|s| s.to_string()).collect(),
        provenance: None,
        samples: out,
    };
    manifest.validate()?;
    let manifest_path = root.join("manifest.json");
    manifest.save(&manifest_path)?;
    Ok(Synthetic { root: root.to_path_buf(), manifest_path, manifest })
}

/// A plausible submission against `manifest`'s ground truth. `noise` in
/// [0, 1] degrades it; 0 reproduces the ground truth exactly.
pub fn submission(
    manifest: &Manifest,
    team: &str,
    method: &str,
    submitted_at: Option<&str>,
    noise: f64,
    seed: u64,
) -> Result<String> {
    let mut rng = SeededRng::new(DerivedSeed(seed));
    let header = SubmissionHeader {
        schema_version: SUBMISSION_SCHEMA_VERSION,
        track: manifest.track,
        team: team.into(),
        method: method.into(),
        submitted_at: submitted_at.map(String::from),
    };
    let gt_path = |s: &Sample| s.gt.clone().ok_or_else(|| Error::Manifest(format!("sample `{}` has no ground truth", s.id)));
    let predictions = if manifest.track.is_detection() {
        let mut out = Vec::new();
        for s in &manifest.samples {
            for g in read_gt_boxes(&gt_path(s)?, &s.id)? {
                if rng.uniform() < noise * 0.5 {
                    continue;
                }
                let mut b = DetBox::from_gt(&g, 1.0 - noise * rng.uniform());
                for t in b.translation.iter_mut().take(2) {
                    *t += noise * rng.normal();
                }
                b.yaw += noise * 0.3 * rng.normal();
                out.push((out.len() + 2, b));
            }
            if noise > 0.0 {
                let mut fp = DetBox::from_gt(
                    &GtBox {
                        sample_id: s.id.clone(),
                        translation: [rng.uniform_range(-40.0, 40.0), rng.uniform_range(-40.0, 40.0), 0.8],
                        size: [1.9, 4.5, 1.6],
                        yaw: 0.0,
                        velocity: [0.0, 0.0],
                        class_name: "car".into(),
                        attribute: Some("vehicle.parked".into()),
                    },
                    noise * rng.uniform(),
                );
                fp.velocity = [0.0, 0.0];
                out.push((out.len() + 2, fp));
            }
        }
        Predictions::Detection(out)
    } else {
        let k = manifest.classes.len() as u64;
        let mut out = Vec::new();
        for (i, s) in manifest.samples.iter().enumerate() {
            let bytes = match read_dense(&gt_path(s)?)? {
                DenseData::Grid(f) => {
                    let gt = f.to_labels()?;
                    let labels = gt
                        .labels()
                        .iter()
                        .map(|&l| if l == IGNORE || rng.uniform() < noise { rng.below(k) as u32 } else { l })
                        .collect();
                    GridFile::from_labels(&LabelGrid::new(gt.dims().to_vec(), labels, IGNORE)?)?.encode()
                }
                DenseData::Depth(gt) => {
                    let values = gt
                        .values()
                        .iter()
                        .map(|&v| {
                            let v = if v > 0.0 { v } else { 20.0 };
                            (v * (1.0 + noise * 0.3 * rng.normal())).clamp(0.5, 250.0)
                        })
                        .collect();
                    encode_depth_png(&DepthMap::new(gt.width(), gt.height(), values)?)?
                }
            };
            out.push(DenseRecord { line: i + 2, sample_id: s.id.clone(), source: DenseSource::Data(bytes) });
        }
        Predictions::Dense(out)
    };
    write_submission_str(&header, &predictions)
}
