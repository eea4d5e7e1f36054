//! The five benchmark tracks and their headline metrics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corruption::{CorruptionType, Modality};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Track {
    BevDetection,
    MapSegmentation,
    Occupancy,
    Depth,
    MultimodalDetection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Nds,
    Miou,
    AbsRel,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Nds => "nds",
            Metric::Miou => "miou",
            Metric::AbsRel => "abs_rel",
        }
    }

    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::AbsRel)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Track {
    pub const ALL: [Track; 5] = [
        Track::BevDetection,
        Track::MapSegmentation,
        Track::Occupancy,
        Track::Depth,
        Track::MultimodalDetection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Track::BevDetection => "bev_detection",
            Track::MapSegmentation => "map_segmentation",
            Track::Occupancy => "occupancy",
            Track::Depth => "depth",
            Track::MultimodalDetection => "multimodal_detection",
        }
    }

    pub fn metric(self) -> Metric {
        match self {
            Track::BevDetection | Track::MultimodalDetection => Metric::Nds,
            Track::MapSegmentation | Track::Occupancy => Metric::Miou,
            Track::Depth => Metric::AbsRel,
        }
    }

    pub fn is_detection(self) -> bool {
        self.metric() == Metric::Nds
    }

    pub fn uses_lidar(self) -> bool {
        self == Track::MultimodalDetection
    }

    /// Whether a manifest of this track may carry the corruption.
    pub fn accepts(self, c: CorruptionType) -> bool {
        match c.modality() {
            Modality::Any | Modality::Camera => true,
            Modality::Lidar => self.uses_lidar(),
        }
    }

    /// Corruption rows of the track's score table, in leaderboard order.
    pub fn corruptions(self) -> Vec<CorruptionType> {
        let mut rows: Vec<CorruptionType> = CorruptionType::camera().collect();
        if self.uses_lidar() {
            rows.extend(CorruptionType::lidar());
        }
        rows
    }
}

impl fmt::Display for Track {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Track {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Track::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "unknown track `{s}`; valid tracks: {}",
                Track::ALL.map(Track::name).join(", ")
            ))
        })
    }
}
