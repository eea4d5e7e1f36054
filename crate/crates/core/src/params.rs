//! Severity-to-parameter table for camera corruptions and LiDAR failures.
//!
//! The canonical table ships embedded (`data/params.toml`) and may be replaced
//! at runtime by a file with the same schema. Every table is validated on load:
//! all 18 camera and 3 LiDAR tags need exactly one record per severity 1..=5,
//! fields must match the corruption's schema, and each corruption's
//! controlling magnitude must be non-decreasing in severity.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::corruption::{parse_corruption, CorruptionType, Severity};
use crate::error::{Error, Result};

pub const CANONICAL_PARAMS_TOML: &str = include_str!("../data/params.toml");

/// SHA-256 of the canonical table's normalized form (see [`ParamsTable::hash`]).
pub const CANONICAL_PARAMS_SHA256: &str =
    "6618e83daea21fd7d2063fa1ffd4b194baf435ba2648aee42d8db8ee70323418";

/// Lower-case hex SHA-256 digest.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CameraParams {
    Brightness { offset: f64 },
    LowLight { scale: f64, noise: f64 },
    Contrast { factor: f64 },
    Fog { weight: f64, decay: f64 },
    Frost { weight: f64 },
    Snow { density: f64, whiten: f64, length: f64 },
    DefocusBlur { radius: f64 },
    GlassBlur { sigma: f64, max_delta: u32, iterations: u32 },
    MotionBlur { length: u32 },
    ZoomBlur { max_zoom: f64, step: f64 },
    ElasticTransform { alpha: f64, sigma: f64 },
    Quantization { bits: u32 },
    GaussianNoise { sigma: f64 },
    ImpulseNoise { fraction: f64 },
    ShotNoise { photons: f64 },
    IsoNoise { gain: f64, read_sigma: f64 },
    Pixelate { factor: u32 },
    JpegCompression { quality: u8 },
}

impl CameraParams {
    pub fn corruption(&self) -> CorruptionType {
        use CameraParams::*;
        match self {
            Brightness { .. } => CorruptionType::Brightness,
            LowLight { .. } => CorruptionType::LowLight,
            Contrast { .. } => CorruptionType::Contrast,
            Fog { .. } => CorruptionType::Fog,
            Frost { .. } => CorruptionType::Frost,
            Snow { .. } => CorruptionType::Snow,
            DefocusBlur { .. } => CorruptionType::DefocusBlur,
            GlassBlur { .. } => CorruptionType::GlassBlur,
            MotionBlur { .. } => CorruptionType::MotionBlur,
            ZoomBlur { .. } => CorruptionType::ZoomBlur,
            ElasticTransform { .. } => CorruptionType::ElasticTransform,
            Quantization { .. } => CorruptionType::Quantization,
            GaussianNoise { .. } => CorruptionType::GaussianNoise,
            ImpulseNoise { .. } => CorruptionType::ImpulseNoise,
            ShotNoise { .. } => CorruptionType::ShotNoise,
            IsoNoise { .. } => CorruptionType::IsoNoise,
            Pixelate { .. } => CorruptionType::Pixelate,
            JpegCompression { .. } => CorruptionType::JpegCompression,
        }
    }

    /// The scalar that controls how strong the distortion is; larger is stronger.
    pub fn magnitude(&self) -> f64 {
        use CameraParams::*;
        match *self {
            Brightness { offset } => offset,
            LowLight { scale, .. } => 1.0 - scale,
            Contrast { factor } => 1.0 - factor,
            Fog { weight, .. } => weight,
            Frost { weight } => weight,
            Snow { density, .. } => density,
            DefocusBlur { radius } => radius,
            GlassBlur { sigma, .. } => sigma,
            MotionBlur { length } => length as f64,
            ZoomBlur { max_zoom, .. } => max_zoom,
            ElasticTransform { alpha, .. } => alpha,
            Quantization { bits } => 8.0 - bits as f64,
            GaussianNoise { sigma } => sigma,
            ImpulseNoise { fraction } => fraction,
            ShotNoise { photons } => 1.0 / photons,
            IsoNoise { gain, .. } => gain,
            Pixelate { factor } => factor as f64,
            JpegCompression { quality } => 100.0 - quality as f64,
        }
    }

    fn from_fields(corruption: CorruptionType, fields: &mut Fields) -> Result<Self> {
        use CorruptionType as C;
        let p = match corruption {
            C::Brightness => CameraParams::Brightness {
                offset: fields.unit("offset")?,
            },
            C::LowLight => CameraParams::LowLight {
                scale: fields.unit("scale")?,
                noise: fields.non_negative("noise")?,
            },
            C::Contrast => CameraParams::Contrast {
                factor: fields.unit("factor")?,
            },
            C::Fog => CameraParams::Fog {
                weight: fields.unit("weight")?,
                decay: fields.positive("decay")?,
            },
            C::Frost => CameraParams::Frost {
                weight: fields.unit("weight")?,
            },
            C::Snow => CameraParams::Snow {
                density: fields.unit("density")?,
                whiten: fields.unit("whiten")?,
                length: fields.positive("length")?,
            },
            C::DefocusBlur => CameraParams::DefocusBlur {
                radius: fields.bounded("radius", 0.0, 64.0)?,
            },
            C::GlassBlur => CameraParams::GlassBlur {
                sigma: fields.bounded("sigma", 0.0, 16.0)?,
                max_delta: fields.integer("max_delta", 0, 32)?,
                iterations: fields.integer("iterations", 0, 16)?,
            },
            C::MotionBlur => CameraParams::MotionBlur {
                length: fields.integer("length", 1, 256)?,
            },
            C::ZoomBlur => CameraParams::ZoomBlur {
                max_zoom: fields.bounded("max_zoom", 1.0, 4.0)?,
                step: fields.bounded("step", 1e-3, 1.0)?,
            },
            C::ElasticTransform => CameraParams::ElasticTransform {
                alpha: fields.unit("alpha")?,
                sigma: fields.bounded("sigma", 1e-4, 1.0)?,
            },
            C::Quantization => CameraParams::Quantization {
                bits: fields.integer("bits", 1, 8)?,
            },
            C::GaussianNoise => CameraParams::GaussianNoise {
                sigma: fields.non_negative("sigma")?,
            },
            C::ImpulseNoise => CameraParams::ImpulseNoise {
                fraction: fields.unit("fraction")?,
            },
            C::ShotNoise => CameraParams::ShotNoise {
                photons: fields.positive("photons")?,
            },
            C::IsoNoise => CameraParams::IsoNoise {
                gain: fields.non_negative("gain")?,
                read_sigma: fields.non_negative("read_sigma")?,
            },
            C::Pixelate => CameraParams::Pixelate {
                factor: fields.integer("factor", 1, 256)?,
            },
            C::JpegCompression => CameraParams::JpegCompression {
                quality: fields.integer("quality", 1, 100)? as u8,
            },
            other => return Err(Error::NotCameraCorruption(other)),
        };
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LidarParams {
    PointsDrop { rate: f64 },
    AngularRestrict { center_deg: f64, width_deg: f64 },
    BeamDrop { count: usize, num_beams: u32 },
}

impl LidarParams {
    pub fn magnitude(&self) -> f64 {
        match *self {
            LidarParams::PointsDrop { rate } => rate,
            LidarParams::AngularRestrict { width_deg, .. } => 360.0 - width_deg,
            LidarParams::BeamDrop { count, .. } => count as f64,
        }
    }

    fn from_fields(corruption: CorruptionType, fields: &mut Fields) -> Result<Self> {
        let p = match corruption {
            CorruptionType::LidarPointsDrop => LidarParams::PointsDrop {
                rate: fields.unit("rate")?,
            },
            CorruptionType::LidarAngularRestrict => {
                let center_deg = fields.bounded("center_deg", 0.0, 360.0)?;
                let width_deg = fields.bounded("width_deg", 0.0, 360.0)?;
                if center_deg >= 360.0 || width_deg <= 0.0 {
                    return Err(fields.err("center_deg must be < 360 and width_deg > 0"));
                }
                LidarParams::AngularRestrict {
                    center_deg,
                    width_deg,
                }
            }
            CorruptionType::LidarBeamDrop => {
                let num_beams = fields.integer("num_beams", 1, 1024)?;
                let count = fields.integer("count", 0, num_beams)? as usize;
                LidarParams::BeamDrop { count, num_beams }
            }
            other => return Err(Error::NotLidarFailure(other)),
        };
        Ok(p)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    schema_version: u32,
    version: String,
    #[serde(default)]
    camera: Vec<RawRow>,
    #[serde(default)]
    lidar: Vec<RawRow>,
}

#[derive(Debug, Deserialize)]
struct RawRow {
    corruption: String,
    severity: i64,
    #[serde(flatten)]
    values: BTreeMap<String, f64>,
}

struct Fields {
    context: String,
    values: BTreeMap<String, f64>,
}

impl Fields {
    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Params(format!("{}: {msg}", self.context))
    }

    fn take(&mut self, key: &str) -> Result<f64> {
        let v = self
            .values
            .remove(key)
            .ok_or_else(|| self.err(format!("missing field `{key}`")))?;
        if !v.is_finite() {
            return Err(self.err(format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    fn bounded(&mut self, key: &str, lo: f64, hi: f64) -> Result<f64> {
        let v = self.take(key)?;
        if v < lo || v > hi {
            return Err(self.err(format!("`{key}` = {v} outside [{lo}, {hi}]")));
        }
        Ok(v)
    }

    fn unit(&mut self, key: &str) -> Result<f64> {
        self.bounded(key, 0.0, 1.0)
    }

    fn non_negative(&mut self, key: &str) -> Result<f64> {
        self.bounded(key, 0.0, f64::MAX)
    }

    fn positive(&mut self, key: &str) -> Result<f64> {
        let v = self.take(key)?;
        if v <= 0.0 {
            return Err(self.err(format!("`{key}` must be positive")));
        }
        Ok(v)
    }

    fn integer(&mut self, key: &str, lo: u32, hi: u32) -> Result<u32> {
        let v = self.bounded(key, lo as f64, hi as f64)?;
        if v.fract() != 0.0 {
            return Err(self.err(format!("`{key}` must be an integer")));
        }
        Ok(v as u32)
    }

    fn finish(self) -> Result<()> {
        if let Some(k) = self.values.keys().next() {
            return Err(self.err(format!("unknown field `{k}`")));
        }
        Ok(())
    }
}

/// A validated parameter table.
#[derive(Debug, Clone)]
pub struct ParamsTable {
    version: String,
    camera: BTreeMap<(CorruptionType, u8), CameraParams>,
    lidar: BTreeMap<(CorruptionType, u8), LidarParams>,
    hash: String,
}

impl ParamsTable {
    /// The embedded canonical table.
    pub fn canonical() -> &'static ParamsTable {
        static TABLE: OnceLock<ParamsTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            ParamsTable::from_toml_str(CANONICAL_PARAMS_TOML)
                .expect("embedded parameter table is valid")
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
            .map_err(|e| Error::Params(format!("{}: {e}", path.display())))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawTable = toml::from_str(text).map_err(|e| Error::Params(e.to_string()))?;
        if raw.schema_version != 1 {
            return Err(Error::Params(format!(
                "unsupported schema_version {}",
                raw.schema_version
            )));
        }

        let mut canonical_rows = Vec::new();
        let mut camera = BTreeMap::new();
        for row in raw.camera {
            let (c, level, mut fields) = Self::open_row(&row, "camera")?;
            if !c.is_camera() {
                return Err(Error::NotCameraCorruption(c));
            }
            let p = CameraParams::from_fields(c, &mut fields)?;
            fields.finish()?;
            if camera.insert((c, level), p).is_some() {
                return Err(Error::Params(format!("duplicate record for {c} severity {level}")));
            }
            canonical_rows.push(("camera", c, level, row.values.clone()));
        }
        let mut lidar = BTreeMap::new();
        for row in raw.lidar {
            let (c, level, mut fields) = Self::open_row(&row, "lidar")?;
            if !c.is_lidar() {
                return Err(Error::NotLidarFailure(c));
            }
            let p = LidarParams::from_fields(c, &mut fields)?;
            fields.finish()?;
            if lidar.insert((c, level), p).is_some() {
                return Err(Error::Params(format!("duplicate record for {c} severity {level}")));
            }
            canonical_rows.push(("lidar", c, level, row.values.clone()));
        }

        for c in CorruptionType::camera() {
            let mags = Self::ladder(c, |s| camera.get(&(c, s)).map(|p| p.magnitude()))?;
            Self::check_monotone(c, &mags)?;
        }
        for c in CorruptionType::lidar() {
            let mags = Self::ladder(c, |s| lidar.get(&(c, s)).map(|p| p.magnitude()))?;
            Self::check_monotone(c, &mags)?;
        }

        canonical_rows.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
        let normalized = serde_json::json!({
            "schema_version": raw.schema_version,
            "version": raw.version,
            "rows": canonical_rows
                .iter()
                .map(|(sec, c, s, v)| serde_json::json!([sec, c.name(), s, v]))
                .collect::<Vec<_>>(),
        });
        let hash = sha256_hex(normalized.to_string().as_bytes());

        Ok(ParamsTable {
            version: raw.version,
            camera,
            lidar,
            hash,
        })
    }

    fn open_row(row: &RawRow, section: &str) -> Result<(CorruptionType, u8, Fields)> {
        let c = parse_corruption(&row.corruption)
            .map_err(|e| Error::Params(format!("[[{section}]]: {e}")))?;
        if !(1..=Severity::MAX as i64).contains(&row.severity) {
            return Err(Error::Params(format!(
                "{c}: severity {} outside 1..=5",
                row.severity
            )));
        }
        let level = row.severity as u8;
        Ok((
            c,
            level,
            Fields {
                context: format!("{c} severity {level}"),
                values: row.values.clone(),
            },
        ))
    }

    fn ladder(c: CorruptionType, get: impl Fn(u8) -> Option<f64>) -> Result<Vec<f64>> {
        (1..=Severity::MAX)
            .map(|s| get(s).ok_or_else(|| Error::Params(format!("{c}: missing severity {s}"))))
            .collect()
    }

    fn check_monotone(c: CorruptionType, mags: &[f64]) -> Result<()> {
        if mags.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Params(format!(
                "{c}: magnitude must be non-decreasing in severity, got {mags:?}"
            )));
        }
        Ok(())
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    /// Hex SHA-256 over a normalized JSON rendering of the table, so that
    /// formatting and row order in the source file do not matter.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn is_canonical(&self) -> bool {
        self.hash == CANONICAL_PARAMS_SHA256
    }

    /// Parameters for a camera corruption. `None` at severity 0.
    pub fn camera(&self, c: CorruptionType, s: Severity) -> Result<Option<CameraParams>> {
        if !c.is_camera() {
            return Err(Error::NotCameraCorruption(c));
        }
        if s.is_identity() {
            return Ok(None);
        }
        self.camera
            .get(&(c, s.level()))
            .copied()
            .map(Some)
            .ok_or_else(|| Error::Internal(format!("missing camera params for {c}/{s}")))
    }

    /// Parameters for a LiDAR failure. `None` at severity 0.
    pub fn lidar(&self, c: CorruptionType, s: Severity) -> Result<Option<LidarParams>> {
        if !c.is_lidar() {
            return Err(Error::NotLidarFailure(c));
        }
        if s.is_identity() {
            return Ok(None);
        }
        self.lidar
            .get(&(c, s.level()))
            .copied()
            .map(Some)
            .ok_or_else(|| Error::Internal(format!("missing lidar params for {c}/{s}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_table_loads_and_is_complete() {
        let t = ParamsTable::canonical();
        for c in CorruptionType::camera() {
            for s in Severity::ladder() {
                let p = t.camera(c, s).unwrap().unwrap();
                assert_eq!(p.corruption(), c);
            }
            assert!(t.camera(c, Severity::IDENTITY).unwrap().is_none());
        }
        for c in CorruptionType::lidar() {
            for s in Severity::ladder() {
                assert!(t.lidar(c, s).unwrap().is_some());
            }
        }
        assert!(t.camera(CorruptionType::LidarBeamDrop, Severity::new(1).unwrap()).is_err());
    }

    #[test]
    fn canonical_hash_is_pinned() {
        assert_eq!(ParamsTable::canonical().hash(), CANONICAL_PARAMS_SHA256);
        assert!(ParamsTable::canonical().is_canonical());
    }

    #[test]
    fn hash_ignores_formatting() {
        let reformatted = CANONICAL_PARAMS_TOML.replace("\n\n", "\n\n# spacer\n");
        let t = ParamsTable::from_toml_str(&reformatted).unwrap();
        assert_eq!(t.hash(), ParamsTable::canonical().hash());
    }

    #[test]
    fn tampered_value_changes_hash() {
        let tampered = CANONICAL_PARAMS_TOML.replacen("offset = 0.1", "offset = 0.15", 1);
        let t = ParamsTable::from_toml_str(&tampered).unwrap();
        assert_ne!(t.hash(), CANONICAL_PARAMS_SHA256);
    }

    #[test]
    fn rejects_non_monotone_ladder() {
        let bad = CANONICAL_PARAMS_TOML.replacen("offset = 0.3", "offset = 0.05", 1);
        let err = ParamsTable::from_toml_str(&bad).unwrap_err();
        assert!(err.to_string().contains("non-decreasing"), "{err}");
    }

    #[test]
    fn rejects_missing_and_unknown_fields() {
        let missing = CANONICAL_PARAMS_TOML.replacen("offset = 0.1\n", "", 1);
        assert!(ParamsTable::from_toml_str(&missing).is_err());
        let unknown = CANONICAL_PARAMS_TOML.replacen("offset = 0.1\n", "offset = 0.1\nspin = 2\n", 1);
        let err = ParamsTable::from_toml_str(&unknown).unwrap_err();
        assert!(err.to_string().contains("spin"));
    }

    #[test]
    fn rejects_missing_severity() {
        let text = CANONICAL_PARAMS_TOML.replacen(
            "[[camera]]\ncorruption = \"brightness\"\nseverity = 5\noffset = 0.5\n",
            "",
            1,
        );
        assert_ne!(text, CANONICAL_PARAMS_TOML);
        let err = ParamsTable::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("missing severity 5"), "{err}");
    }
}
