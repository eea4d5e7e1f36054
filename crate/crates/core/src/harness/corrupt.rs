use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::camera::corrupt_image;
use crate::corruption::CorruptionType;
use crate::error::{Error, Result};
use crate::io::manifest::{Manifest, Provenance, Sample};
use crate::io::{read_image, read_pointcloud, write_image, write_pointcloud};
use crate::lidar::corrupt_cloud;
use crate::params::ParamsTable;
use crate::seed::{derive_seed, stable_hash64, DerivedSeed};

use super::with_jobs;

pub struct CorruptOptions<'a> {
    pub seed: u64,
    pub params: &'a ParamsTable,
    /// Worker threads; `None` uses all cores. Never affects output bytes.
    pub jobs: Option<usize>,
}

#[derive(Debug)]
pub struct CorruptReport {
    /// Written to `<out>/manifest.json` when every sample succeeded.
    pub manifest: Option<Manifest>,
    pub failed: Vec<(String, String)>,
}

/// Per-camera seed so that cameras of one sample get independent noise.
pub fn camera_seed(sample_seed: DerivedSeed, camera: &str) -> DerivedSeed {
    let mut bytes = sample_seed.0.to_string().into_bytes();
    bytes.push(0x1f);
    bytes.extend_from_slice(camera.as_bytes());
    DerivedSeed(stable_hash64(&bytes))
}

fn copy(from: &Path, to: &Path) -> Result<()> {
    std::fs::copy(from, to).map(|_| ()).map_err(|e| Error::io(from, e))
}

fn extension(p: &Path, fallback: &str) -> String {
    p.extension().and_then(|e| e.to_str()).unwrap_or(fallback).to_string()
}

fn corrupt_sample(s: &Sample, out: &Path, opts: &CorruptOptions<'_>) -> Result<Sample> {
    let dir = out.join(s.id.as_str());
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let seed = derive_seed(opts.seed, &s.id, s.corruption, s.severity);
    let identity = s.severity.is_identity() || s.corruption == CorruptionType::Clean;

    let mut cameras = std::collections::BTreeMap::new();
    for (name, src) in &s.cameras {
        let dst;
        if identity || !s.corruption.is_camera() {
            dst = dir.join(format!("{name}.{}", extension(src, "png")));
            copy(src, &dst)?;
        } else {
            dst = dir.join(format!("{name}.png"));
            let img = read_image(src)?;
            let out = corrupt_image(&img, s.corruption, s.severity, camera_seed(seed, name), opts.params)?;
            write_image(&out, &dst)?;
        }
        cameras.insert(name.clone(), dst);
    }
    let lidar = match &s.lidar {
        None => None,
        Some(src) if identity || !s.corruption.is_lidar() => {
            let dst = dir.join(format!("lidar.{}", extension(src, "bin")));
            copy(src, &dst)?;
            Some(dst)
        }
        Some(src) => {
            let dst = dir.join("lidar.bin");
            let pc = read_pointcloud(src)?;
            write_pointcloud(&corrupt_cloud(&pc, s.corruption, s.severity, seed, opts.params)?, &dst)?;
            Some(dst)
        }
    };
    let gt = match &s.gt {
        None => None,
        Some(src) => {
            let dst: PathBuf = dir.join(format!("gt.{}", extension(src, "dat")));
            copy(src, &dst)?;
            Some(dst)
        }
    };
    Ok(Sample { id: s.id.clone(), cameras, lidar, gt, corruption: s.corruption, severity: s.severity })
}

/// Apply every sample's corruption and write `<out>/<id>/...` plus a new
/// manifest. Identity samples are copied byte for byte.
pub fn corrupt_dataset(manifest: &Manifest, out: &Path, opts: &CorruptOptions<'_>) -> Result<CorruptReport> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let results: Vec<Result<Sample>> =
        with_jobs(opts.jobs, || manifest.samples.par_iter().map(|s| corrupt_sample(s, out, opts)).collect())?;
    let mut samples = Vec::new();
    let mut failed = Vec::new();
    for (s, r) in manifest.samples.iter().zip(results) {
        match r {
            Ok(done) => samples.push(done),
            Err(e) => failed.push((s.id.to_string(), e.to_string())),
        }
    }
    if !failed.is_empty() {
        return Ok(CorruptReport { manifest: None, failed });
    }
    let new = Manifest {
        samples,
        provenance: Some(Provenance { seed: opts.seed, params_hash: opts.params.hash().to_string() }),
        ..manifest.clone()
    };
    new.save(out.join("manifest.json"))?;
    Ok(CorruptReport { manifest: Some(new), failed })
}
