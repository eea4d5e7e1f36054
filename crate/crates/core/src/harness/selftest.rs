use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::camera::{corrupt_image, Image};
use crate::corruption::{parse_corruption, CorruptionType, Severity};
use crate::depth::{evaluate_depth, DepthConfig, DepthMap};
use crate::detection::{nds, TpErrors};
use crate::grid::{miou, ConfusionMatrix, LabelGrid};
use crate::io::container::GridFile;
use crate::io::png::{decode_depth_png, decode_image, encode_depth_png, encode_image};
use crate::io::pointcloud::{decode_pointcloud, encode_pointcloud};
use crate::lidar::{corrupt_cloud, Point, PointCloud};
use crate::params::{sha256_hex, ParamsTable};
use crate::seed::{derive_seed, SampleId};

/// Golden vectors compiled into the binary.
pub const EMBEDDED_VECTORS: &str = include_str!("data/golden.json");

const FIXTURE_SEED: u64 = 7;
const FIXTURE_SAMPLE: &str = "selftest";
const FIXTURE_SEVERITY: u8 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedVector {
    pub global: u64,
    pub sample: String,
    pub corruption: String,
    pub severity: u8,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenVectors {
    pub params_hash: String,
    pub seeds: Vec<SeedVector>,
    /// SHA-256 of the raw RGB bytes (camera) or encoded `.bin` (LiDAR) of the
    /// procedural fixture corrupted at severity 3.
    pub digests: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, outcome: std::result::Result<(), String>) {
        let (passed, detail) = match outcome {
            Ok(()) => (true, String::new()),
            Err(d) => (false, d),
        };
        self.checks.push(Check { name: name.into(), passed, detail });
    }
}

impl std::fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            if c.passed {
                writeln!(f, "PASS {}", c.name)?;
            } else {
                writeln!(f, "FAIL {}: {}", c.name, c.detail)?;
            }
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// 64×48 gradient-and-checker image; exercises every channel and edges.
pub fn fixture_image() -> Image {
    Image::from_fn(64, 48, |x, y| {
        let checker = if (x / 8 + y / 8) % 2 == 0 { 40 } else { 0 };
        [(x * 4) as u8, (y * 5) as u8, (((x + y) * 2) as u8).wrapping_add(checker)]
    })
}

/// 32 rings × 90 azimuth steps on a 20 m cylinder.
pub fn fixture_cloud() -> PointCloud {
    let mut points = Vec::with_capacity(32 * 90);
    for ring in 0..32u32 {
        let elev = (-30.0 + ring as f64 * 40.0 / 31.0).to_radians();
        for step in 0..90 {
            let az = (step as f64 * 4.0).to_radians();
            let r = 20.0;
            points.push(Point {
                x: (r * elev.cos() * az.cos()) as f32,
                y: (r * elev.cos() * az.sin()) as f32,
                z: (r * elev.sin()) as f32,
                intensity: ((ring * 7 + step) % 255) as f32,
                ring: Some(ring),
            });
        }
    }
    PointCloud::new(points).expect("fixture points are finite")
}

/// Digests of every corruption applied to the fixtures at severity 3.
pub fn corruption_digests(params: &ParamsTable) -> crate::Result<BTreeMap<String, String>> {
    let sample = SampleId::new(FIXTURE_SAMPLE)?;
    let sev = Severity::new(FIXTURE_SEVERITY)?;
    let img = fixture_image();
    let cloud = fixture_cloud();
    let mut out = BTreeMap::new();
    for &c in CorruptionType::ALL {
        let seed = derive_seed(FIXTURE_SEED, &sample, c, sev);
        let digest = if c.is_camera() {
            sha256_hex(corrupt_image(&img, c, sev, seed, params)?.data())
        } else if c.is_lidar() {
            sha256_hex(&encode_pointcloud(&corrupt_cloud(&cloud, c, sev, seed, params)?))
        } else {
            continue;
        };
        out.insert(c.name().to_string(), digest);
    }
    Ok(out)
}

fn check_seeds(v: &GoldenVectors) -> std::result::Result<(), String> {
    if v.seeds.is_empty() {
        return Err("no seed vectors".into());
    }
    let mut seen = std::collections::HashSet::new();
    for s in &v.seeds {
        let id = SampleId::new(s.sample.as_str()).map_err(|e| e.to_string())?;
        let c = parse_corruption(&s.corruption).map_err(|e| e.to_string())?;
        let sev = Severity::new(s.severity).map_err(|e| e.to_string())?;
        let got = derive_seed(s.global, &id, c, sev).0;
        if got != s.seed {
            return Err(format!("({}, {}, {}, {}) gave {got:#018x}, expected {:#018x}", s.global, s.sample, s.corruption, s.severity, s.seed));
        }
        if !seen.insert(got) {
            return Err(format!("seed {got:#018x} repeats across vectors"));
        }
    }
    Ok(())
}

fn check_digests(v: &GoldenVectors, params: &ParamsTable) -> std::result::Result<(), String> {
    let got = corruption_digests(params).map_err(|e| e.to_string())?;
    let mut bad: Vec<&str> = got
        .iter()
        .filter(|(k, d)| v.digests.get(*k) != Some(d))
        .map(|(k, _)| k.as_str())
        .collect();
    bad.extend(v.digests.keys().filter(|k| !got.contains_key(*k)).map(String::as_str));
    if bad.is_empty() {
        Ok(())
    } else {
        Err(format!("digest mismatch for {}", bad.join(", ")))
    }
}

fn close(name: &str, got: f64, want: f64, tol: f64) -> std::result::Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{name}: got {got}, expected {want}"))
    }
}

fn check_metrics() -> std::result::Result<(), String> {
    let half = TpErrors { ate: 0.5, ase: 0.5, aoe: 0.5, ave: 0.5, aae: 0.5 };
    close("nds(0.4, 0.5)", nds(0.4, &half), 0.45, 0.0)?;
    close("nds perfect", nds(1.0, &TpErrors::ZERO), 1.0, 0.0)?;

    let gt = DepthMap::new(4, 1, vec![2.0, 4.0, 8.0, 16.0]).map_err(|e| e.to_string())?;
    let scaled = |k: f64| DepthMap::new(4, 1, gt.values().iter().map(|v| v * k).collect());
    let cfg = DepthConfig::default();
    let m = evaluate_depth(&scaled(0.9).map_err(|e| e.to_string())?, &gt, &cfg)
        .map_err(|e| e.to_string())?
        .ok_or("no valid depth")?;
    close("abs_rel(0.9·gt)", m.abs_rel, 0.1, 1e-12)?;
    let m = evaluate_depth(&scaled(1.3).map_err(|e| e.to_string())?, &gt, &cfg)
        .map_err(|e| e.to_string())?
        .ok_or("no valid depth")?;
    close("delta1(1.3·gt)", m.delta1, 0.0, 0.0)?;
    close("delta2(1.3·gt)", m.delta2, 100.0, 0.0)?;

    // gt  0 0 1 1 2 ; pred 0 1 1 1 ignore → IoU0 1/2, IoU1 2/3, IoU2 0.
    let gt = LabelGrid::new(vec![1, 5], vec![0, 0, 1, 1, 2], 255).map_err(|e| e.to_string())?;
    let pred = LabelGrid::new(vec![1, 5], vec![0, 1, 1, 1, 255], 255).map_err(|e| e.to_string())?;
    let mut cm = ConfusionMatrix::new(3);
    cm.accumulate(&pred, &gt).map_err(|e| e.to_string())?;
    let v = miou(&cm, &[0, 1, 2]).map_err(|e| e.to_string())?;
    close("miou", v, (0.5 + 2.0 / 3.0 + 0.0) / 3.0, 1e-15)
}

fn check_codecs() -> std::result::Result<(), String> {
    let err = |e: crate::Error| e.to_string();
    let img = fixture_image();
    if decode_image(&encode_image(&img).map_err(err)?).map_err(err)? != img {
        return Err("png image round trip".into());
    }
    let depth = DepthMap::new(3, 2, vec![0.0, 1.0, 2.5, 10.25, 80.0, 255.99609375]).map_err(err)?;
    if decode_depth_png(&encode_depth_png(&depth).map_err(err)?).map_err(err)? != depth {
        return Err("depth png round trip".into());
    }
    let cloud = fixture_cloud();
    if decode_pointcloud(&encode_pointcloud(&cloud)).map_err(err)? != cloud {
        return Err("point cloud round trip".into());
    }
    let grid = LabelGrid::new(vec![2, 3, 2], (0..12).map(|i| i % 4).collect(), 255).map_err(err)?;
    let file = GridFile::from_labels(&grid).map_err(err)?;
    if GridFile::decode(&file.encode()).map_err(err)?.to_labels().map_err(err)? != grid {
        return Err("grid container round trip".into());
    }
    Ok(())
}

/// Run the golden checks. `vectors` is normally [`EMBEDDED_VECTORS`]; a
/// missing or unreadable vector set fails the run.
pub fn run_selftest(vectors: Option<&str>, params: &ParamsTable) -> SelftestReport {
    let mut report = SelftestReport::default();
    let golden = match vectors.map(serde_json::from_str::<GoldenVectors>) {
        None => {
            report.push("golden vectors", Err("embedded vectors are missing".into()));
            None
        }
        Some(Err(e)) => {
            report.push("golden vectors", Err(format!("unreadable: {e}")));
            None
        }
        Some(Ok(v)) => {
            report.push("golden vectors", Ok(()));
            Some(v)
        }
    };
    if let Some(v) = &golden {
        report.push(
            "params table hash",
            if params.hash() == v.params_hash {
                Ok(())
            } else {
                Err(format!(
                    "params table `{}` has hash {}, expected {}",
                    params.version(),
                    params.hash(),
                    v.params_hash
                ))
            },
        );
        report.push("seed derivation", check_seeds(v));
        report.push("corruption digests", check_digests(v, params));
    }
    report.push("metric oracles", check_metrics());
    report.push("codec round trips", check_codecs());
    report
}
