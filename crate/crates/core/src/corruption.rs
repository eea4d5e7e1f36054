//! Corruption tags and the severity ladder.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Sensor a corruption applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    Camera,
    Lidar,
    /// The `clean` tag applies to every sensor.
    Any,
}

macro_rules! corruption_types {
    ($($variant:ident => $name:literal, $modality:ident;)*) => {
        /// Every corruption the toolkit knows: 18 camera corruptions, 3 LiDAR
        /// failure modes and the `clean` pass-through.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum CorruptionType {
            $($variant,)*
        }

        impl CorruptionType {
            pub const ALL: &'static [CorruptionType] = &[$(CorruptionType::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(CorruptionType::$variant => $name,)*
                }
            }

            pub fn modality(self) -> Modality {
                match self {
                    $(CorruptionType::$variant => Modality::$modality,)*
                }
            }
        }
    };
}

corruption_types! {
    Brightness => "brightness", Camera;
    LowLight => "low_light", Camera;
    Fog => "fog", Camera;
    Frost => "frost", Camera;
    Snow => "snow", Camera;
    Contrast => "contrast", Camera;
    DefocusBlur => "defocus_blur", Camera;
    GlassBlur => "glass_blur", Camera;
    MotionBlur => "motion_blur", Camera;
    ZoomBlur => "zoom_blur", Camera;
    ElasticTransform => "elastic_transform", Camera;
    Quantization => "quantization", Camera;
    GaussianNoise => "gaussian_noise", Camera;
    ImpulseNoise => "impulse_noise", Camera;
    ShotNoise => "shot_noise", Camera;
    IsoNoise => "iso_noise", Camera;
    Pixelate => "pixelate", Camera;
    JpegCompression => "jpeg_compression", Camera;
    LidarPointsDrop => "lidar_points_drop", Lidar;
    LidarAngularRestrict => "lidar_angular_restrict", Lidar;
    LidarBeamDrop => "lidar_beam_drop", Lidar;
    Clean => "clean", Any;
}

impl CorruptionType {
    /// The 18 camera corruptions in leaderboard column order.
    pub fn camera() -> impl Iterator<Item = CorruptionType> {
        Self::ALL
            .iter()
            .copied()
            .filter(|c| c.modality() == Modality::Camera)
    }

    pub fn lidar() -> impl Iterator<Item = CorruptionType> {
        Self::ALL
            .iter()
            .copied()
            .filter(|c| c.modality() == Modality::Lidar)
    }

    pub fn is_camera(self) -> bool {
        self.modality() == Modality::Camera
    }

    pub fn is_lidar(self) -> bool {
        self.modality() == Modality::Lidar
    }
}

/// Parses a snake_case corruption tag.
pub fn parse_corruption(name: &str) -> Result<CorruptionType> {
    CorruptionType::ALL
        .iter()
        .copied()
        .find(|c| c.name() == name)
        .ok_or_else(|| Error::UnknownCorruption {
            name: name.to_string(),
            valid: CorruptionType::ALL
                .iter()
                .map(|c| c.name())
                .collect::<Vec<_>>()
                .join(", "),
        })
}

impl FromStr for CorruptionType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_corruption(s)
    }
}

impl fmt::Display for CorruptionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for CorruptionType {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for CorruptionType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_corruption(&s).map_err(serde::de::Error::custom)
    }
}

/// Severity level 0..=5. Level 0 is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Severity(u8);

impl Severity {
    pub const IDENTITY: Severity = Severity(0);
    pub const MAX: u8 = 5;

    pub fn new(level: u8) -> Result<Self> {
        if level > Self::MAX {
            return Err(Error::InvalidSeverity(level as i64));
        }
        Ok(Severity(level))
    }

    pub fn level(self) -> u8 {
        self.0
    }

    pub fn is_identity(self) -> bool {
        self.0 == 0
    }

    /// Levels 1..=5.
    pub fn ladder() -> impl Iterator<Item = Severity> {
        (1..=Self::MAX).map(Severity)
    }
}

impl<'de> Deserialize<'de> for Severity {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let level = i64::deserialize(deserializer)?;
        if !(0..=Severity::MAX as i64).contains(&level) {
            return Err(serde::de::Error::custom(Error::InvalidSeverity(level)));
        }
        Ok(Severity(level as u8))
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
