//! LiDAR failure modes: random point loss, field-of-view restriction and
//! beam failure. Every operation is a pure filter: the output is an
//! order-preserving subsequence of the input with untouched point records.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corruption::{CorruptionType, Severity};
use crate::error::{Error, Result};
use crate::params::{LidarParams, ParamsTable};
use crate::rng::SeededRng;
use crate::seed::DerivedSeed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f32,
    pub y: f32,
    pub z: f32,
    pub intensity: f32,
    pub ring: Option<u32>,
}

impl Point {
    pub fn new(x: f32, y: f32, z: f32, intensity: f32, ring: Option<u32>) -> Self {
        Self { x, y, z, intensity, ring }
    }

    /// Azimuth in degrees, counterclockwise from +x, in `[0, 360)`.
    pub fn azimuth_deg(&self) -> f64 {
        let deg = libm::atan2(self.y as f64, self.x as f64).to_degrees();
        let wrapped = if deg < 0.0 { deg + 360.0 } else { deg };
        // -0.0 and rounding of tiny negatives can land exactly on 360.
        if wrapped >= 360.0 {
            0.0
        } else {
            wrapped
        }
    }

    /// Elevation angle in radians; 0 for a point at the origin.
    pub fn elevation(&self) -> f64 {
        let (x, y, z) = (self.x as f64, self.y as f64, self.z as f64);
        let range = libm::sqrt(x * x + y * y + z * z);
        if range == 0.0 {
            0.0
        } else {
            libm::asin((z / range).clamp(-1.0, 1.0))
        }
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.intensity.is_finite()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
}

impl PointCloud {
    /// Validating constructor: every coordinate and intensity must be finite.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidPointCloud(format!("point {i} has a non-finite value")));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True when every point carries a ring index.
    pub fn has_rings(&self) -> bool {
        self.points.iter().all(|p| p.ring.is_some())
    }

    fn filter_by(&self, mut keep: impl FnMut(usize, &Point) -> bool) -> PointCloud {
        let points = self
            .points
            .iter()
            .enumerate()
            .filter(|(i, p)| keep(*i, p))
            .map(|(_, p)| *p)
            .collect();
        PointCloud { points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularWindow {
    center_deg: f64,
    width_deg: f64,
}

impl AngularWindow {
    /// `center_deg` is wrapped into `[0, 360)`; `width_deg` must lie in `(0, 360]`.
    pub fn new(center_deg: f64, width_deg: f64) -> Result<Self> {
        if !center_deg.is_finite() {
            return Err(Error::InvalidWindow(format!("center {center_deg} is not finite")));
        }
        if !(width_deg > 0.0 && width_deg <= 360.0) {
            return Err(Error::InvalidWindow(format!("width {width_deg} outside (0, 360]")));
        }
        let center_deg = center_deg.rem_euclid(360.0);
        let center_deg = if center_deg >= 360.0 { 0.0 } else { center_deg };
        Ok(Self { center_deg, width_deg })
    }

    pub fn center_deg(&self) -> f64 {
        self.center_deg
    }

    pub fn width_deg(&self) -> f64 {
        self.width_deg
    }

    pub fn contains(&self, azimuth_deg: f64) -> bool {
        let d = (azimuth_deg - self.center_deg).abs() % 360.0;
        d.min(360.0 - d) <= self.width_deg / 2.0
    }
}

/// Drop each point independently with probability `rate`.
pub fn drop_points(pc: &PointCloud, rate: f64, seed: DerivedSeed) -> Result<PointCloud> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidRate(rate));
    }
    let mut rng = SeededRng::new(seed);
    Ok(pc.filter_by(|_, _| rng.uniform() >= rate))
}

/// Keep exactly the points whose azimuth falls inside `window`.
pub fn restrict_angular(pc: &PointCloud, window: &AngularWindow) -> PointCloud {
    pc.filter_by(|_, p| window.contains(p.azimuth_deg()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BeamSelection {
    Explicit(BTreeSet<u32>),
    /// Sample this many distinct beams from the seed.
    RandomCount(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeamDropOptions {
    pub num_beams: u32,
    /// Infer rings from elevation when the cloud lacks them instead of failing.
    pub infer_missing_rings: bool,
}

/// Resolve a selection to a concrete beam set.
pub fn select_beams(
    selection: &BeamSelection,
    num_beams: u32,
    seed: DerivedSeed,
) -> Result<BTreeSet<u32>> {
    match selection {
        BeamSelection::Explicit(set) => {
            if let Some(&beam) = set.iter().find(|&&b| b >= num_beams) {
                return Err(Error::BeamOutOfRange { beam, num_beams });
            }
            Ok(set.clone())
        }
        BeamSelection::RandomCount(count) => {
            if *count > num_beams as usize {
                return Err(Error::InvalidBeamCount { requested: *count, num_beams });
            }
            let mut rng = SeededRng::new(seed);
            Ok(rng.sample_without_replacement(num_beams, *count).into_iter().collect())
        }
    }
}

/// Remove every point produced by a dropped beam. Points keep their original
/// ring field even when rings had to be inferred.
pub fn drop_beams(
    pc: &PointCloud,
    selection: &BeamSelection,
    opts: &BeamDropOptions,
    seed: DerivedSeed,
) -> Result<PointCloud> {
    if opts.num_beams == 0 {
        return Err(Error::InvalidConfig("num_beams must be positive".into()));
    }
    let beams = select_beams(selection, opts.num_beams, seed)?;
    if beams.is_empty() || pc.is_empty() {
        return Ok(pc.clone());
    }
    let rings: Vec<u32> = if pc.has_rings() {
        let rings: Vec<u32> = pc.points.iter().map(|p| p.ring.unwrap_or(0)).collect();
        if let Some(&beam) = rings.iter().find(|&&r| r >= opts.num_beams) {
            return Err(Error::BeamOutOfRange { beam, num_beams: opts.num_beams });
        }
        rings
    } else if opts.infer_missing_rings {
        infer_rings(pc, opts.num_beams)?.rings
    } else {
        return Err(Error::RingAbsent);
    };
    Ok(pc.filter_by(|i, _| !beams.contains(&rings[i])))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RingStatus {
    Ok,
    /// Fewer distinct elevations than beams; only as many rings as distinct
    /// elevations were assigned.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingInference {
    /// Inferred ring per input point, 0 = lowest elevation.
    pub rings: Vec<u32>,
    pub status: RingStatus,
}

impl RingInference {
    /// The input cloud with rings replaced by the inferred ones.
    pub fn apply(&self, pc: &PointCloud) -> PointCloud {
        let points = pc
            .points
            .iter()
            .zip(&self.rings)
            .map(|(p, &r)| Point { ring: Some(r), ..*p })
            .collect();
        PointCloud { points }
    }
}

/// Assign ring indices by splitting the sorted distinct elevation angles at
/// the `num_beams - 1` widest gaps.
pub fn infer_rings(pc: &PointCloud, num_beams: u32) -> Result<RingInference> {
    if pc.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if num_beams == 0 {
        return Err(Error::InvalidConfig("num_beams must be positive".into()));
    }
    let elevations: Vec<f64> = pc.points.iter().map(Point::elevation).collect();
    let mut distinct = elevations.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();

    let wanted = num_beams as usize - 1;
    let mut gaps: Vec<(f64, usize)> = distinct.windows(2).enumerate().map(|(i, w)| (w[1] - w[0], i)).collect();
    // Widest first; equal gaps keep the lower one.
    gaps.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let status = if gaps.len() < wanted && num_beams > 1 {
        RingStatus::Degenerate
    } else {
        RingStatus::Ok
    };
    // Upper edges (inclusive) of each ring except the last.
    let mut cuts: Vec<f64> = gaps.iter().take(wanted).map(|&(_, i)| distinct[i]).collect();
    cuts.sort_by(f64::total_cmp);

    let rings = elevations
        .iter()
        .map(|e| cuts.partition_point(|&c| c < *e) as u32)
        .collect();
    Ok(RingInference { rings, status })
}

/// Apply explicit failure parameters.
pub fn apply(pc: &PointCloud, params: &LidarParams, seed: DerivedSeed) -> Result<PointCloud> {
    match *params {
        LidarParams::PointsDrop { rate } => drop_points(pc, rate, seed),
        LidarParams::AngularRestrict { center_deg, width_deg } => {
            Ok(restrict_angular(pc, &AngularWindow::new(center_deg, width_deg)?))
        }
        LidarParams::BeamDrop { count, num_beams } => drop_beams(
            pc,
            &BeamSelection::RandomCount(count),
            &BeamDropOptions { num_beams, infer_missing_rings: true },
            seed,
        ),
    }
}

/// Apply a LiDAR failure at the given severity using the parameter table.
pub fn corrupt_cloud(
    pc: &PointCloud,
    failure: CorruptionType,
    severity: Severity,
    seed: DerivedSeed,
    table: &ParamsTable,
) -> Result<PointCloud> {
    if !failure.is_lidar() {
        return Err(Error::NotLidarFailure(failure));
    }
    match table.lidar(failure, severity)? {
        None => Ok(pc.clone()),
        Some(params) => apply(pc, &params, seed),
    }
}
