//! Dataset manifest: one JSON document listing every sample, its sensor
//! files, ground truth and the corruption it carries.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "track": "bev_detection",
//!   "classes": ["car", "pedestrian"],
//!   "samples": [
//!     {"id": "s1", "cameras": {"front": "img/s1.png"}, "gt": "gt/s1.jsonl",
//!      "corruption": "fog", "severity": 3}
//!   ]
//! }
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corruption::{CorruptionType, Severity};
use crate::detection::DetectionConfig;
use crate::error::{Error, Result};
use crate::grid::DEFAULT_IGNORE;
use crate::seed::SampleId;
use crate::track::Track;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Class names treated as free space in occupancy when `empty_class` is unset.
const DEFAULT_EMPTY_NAMES: [&str; 2] = ["empty", "free"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub seed: u64,
    pub params_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample {
    pub id: SampleId,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub cameras: BTreeMap<String, PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lidar: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt: Option<PathBuf>,
    pub corruption: CorruptionType,
    pub severity: Severity,
}

fn default_ignore() -> u32 {
    DEFAULT_IGNORE
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub track: Track,
    #[serde(default)]
    pub classes: Vec<String>,
    /// Occupancy free-space class, excluded from mIoU.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empty_class: Option<String>,
    /// Label for map cells where no probability channel reaches 0.5.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background_class: Option<String>,
    #[serde(default = "default_ignore")]
    pub ignore_value: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attributeless_classes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub samples: Vec<Sample>,
}

fn manifest_err(msg: impl Into<String>) -> Error {
    Error::Manifest(msg.into())
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s != "." && s != ".." && !s.contains(['/', '\\', '\0'])
}

impl Manifest {
    /// Read, resolve and fully validate, including that referenced files exist.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let m = Self::parse(&text, base)?;
        m.check_files()?;
        Ok(m)
    }

    /// Parse and validate without touching the file system.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut m: Manifest = serde_json::from_str(text).map_err(|e| manifest_err(e.to_string()))?;
        m.validate()?;
        m.resolve(base_dir);
        Ok(m)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for s in &mut self.samples {
            s.cameras.values_mut().for_each(fix);
            s.lidar.as_mut().map(fix);
            s.gt.as_mut().map(fix);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(manifest_err(format!(
                "unsupported schema_version {}, expected {MANIFEST_SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        let mut classes = HashSet::new();
        for c in &self.classes {
            if c.is_empty() || !classes.insert(c.as_str()) {
                return Err(manifest_err(format!("class list has an empty or duplicate name `{c}`")));
            }
        }
        if self.track != Track::Depth && self.classes.is_empty() {
            return Err(manifest_err(format!("track {} needs a class list", self.track)));
        }
        for (field, value) in [("empty_class", &self.empty_class), ("background_class", &self.background_class)] {
            if let Some(v) = value {
                if !classes.contains(v.as_str()) {
                    return Err(manifest_err(format!("{field} `{v}` is not in classes")));
                }
            }
        }
        if let Some(c) = self.attributeless_classes.iter().find(|c| !classes.contains(c.as_str())) {
            return Err(manifest_err(format!("attributeless class `{c}` is not in classes")));
        }
        if self.track.metric() == crate::track::Metric::Miou && (self.ignore_value as usize) < self.classes.len() {
            return Err(manifest_err(format!("ignore_value {} collides with a class id", self.ignore_value)));
        }
        if self.samples.is_empty() {
            return Err(manifest_err("no samples"));
        }
        let mut ids = HashSet::new();
        for s in &self.samples {
            if !ids.insert(&s.id) {
                return Err(Error::DuplicateSample(s.id.to_string()));
            }
            self.validate_sample(s)?;
        }
        Ok(())
    }

    fn validate_sample(&self, s: &Sample) -> Result<()> {
        let mismatch = |msg: String| Error::ModalityMismatch { sample: s.id.to_string(), msg };
        if let Some(cam) = s.cameras.keys().find(|c| !valid_name(c)) {
            return Err(manifest_err(format!("sample `{}`: invalid camera name `{cam}`", s.id)));
        }
        if s.corruption == CorruptionType::Clean && !s.severity.is_identity() {
            return Err(manifest_err(format!("sample `{}`: clean samples must have severity 0", s.id)));
        }
        if !self.track.accepts(s.corruption) {
            return Err(mismatch(format!("{} is a LiDAR failure but track {} has no LiDAR", s.corruption, self.track)));
        }
        if s.lidar.is_some() && !self.track.uses_lidar() {
            return Err(mismatch(format!("track {} does not take LiDAR input", self.track)));
        }
        if s.corruption.is_lidar() && s.lidar.is_none() {
            return Err(mismatch(format!("{} needs a lidar file", s.corruption)));
        }
        if s.corruption.is_camera() && s.cameras.is_empty() {
            return Err(mismatch(format!("{} needs at least one camera image", s.corruption)));
        }
        if s.cameras.is_empty() && s.lidar.is_none() {
            return Err(mismatch("no sensor data".into()));
        }
        Ok(())
    }

    /// Every referenced file must exist.
    pub fn check_files(&self) -> Result<()> {
        for s in &self.samples {
            let paths = s.cameras.values().chain(s.lidar.as_ref()).chain(s.gt.as_ref());
            for p in paths {
                if !p.is_file() {
                    return Err(manifest_err(format!("sample `{}`: file {} does not exist", s.id, p.display())));
                }
            }
        }
        Ok(())
    }

    /// Serialize with paths relative to `dir` where possible.
    pub fn to_json_relative_to(&self, dir: &Path) -> Result<String> {
        let mut m = self.clone();
        let rel = |p: &mut PathBuf| {
            if let Ok(r) = p.strip_prefix(dir) {
                *p = r.to_path_buf();
            }
        };
        for s in &mut m.samples {
            s.cameras.values_mut().for_each(rel);
            s.lidar.as_mut().map(rel);
            s.gt.as_mut().map(rel);
        }
        let mut text = serde_json::to_string_pretty(&m).map_err(|e| Error::Internal(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let dir = path.parent().unwrap_or(Path::new("."));
        std::fs::write(path, self.to_json_relative_to(dir)?).map_err(|e| Error::io(path, e))
    }

    pub fn sample(&self, id: &SampleId) -> Option<&Sample> {
        self.samples.iter().find(|s| &s.id == id)
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    /// Classes excluded from mIoU: the occupancy free-space class.
    pub fn excluded_grid_classes(&self) -> Vec<usize> {
        if self.track != Track::Occupancy {
            return Vec::new();
        }
        match &self.empty_class {
            Some(c) => self.class_index(c).into_iter().collect(),
            None => DEFAULT_EMPTY_NAMES.iter().filter_map(|n| self.class_index(n)).take(1).collect(),
        }
    }

    /// Label given to cells without a confident probability channel.
    pub fn grid_fallback_label(&self) -> u32 {
        self.background_class
            .as_deref()
            .and_then(|c| self.class_index(c))
            .map_or(self.ignore_value, |i| i as u32)
    }

    pub fn detection_config(&self) -> DetectionConfig {
        let mut cfg = DetectionConfig::new(self.classes.iter().cloned());
        cfg.attributeless_classes = self.attributeless_classes.clone();
        cfg
    }
}
