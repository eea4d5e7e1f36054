use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corruption::CorruptionType;
use crate::error::{Error, Result};
use crate::track::{Metric, Track};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Arithmetic mean of per-corruption scores; `None` for no scores.
pub fn headline(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub corruption: CorruptionType,
    /// `None` when no sample of this corruption could be scored.
    pub value: Option<f64>,
    pub samples: usize,
    /// Secondary numbers (e.g. mAP and TP errors, RMSE and δ accuracies).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableMetadata {
    pub team: String,
    pub method: String,
    #[serde(default)]
    pub timestamp: Option<String>,
    pub toolkit_version: String,
    pub params_hash: String,
    pub seed: u64,
}

/// Scores of one submission: one row per corruption of the track, a separate
/// clean row, and the headline mean over the corruption rows that have a value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub track: Track,
    pub metric: Metric,
    pub rows: Vec<ScoreRow>,
    #[serde(default)]
    pub clean: Option<ScoreRow>,
    pub headline: Option<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub metadata: TableMetadata,
}

impl ScoreTable {
    /// Build a table from scored rows; missing corruptions become absent rows.
    pub fn from_rows(
        track: Track,
        scored: Vec<ScoreRow>,
        clean: Option<ScoreRow>,
        metadata: TableMetadata,
        mut warnings: Vec<String>,
    ) -> Result<Self> {
        let order = track.corruptions();
        let mut by_tag: BTreeMap<CorruptionType, ScoreRow> = BTreeMap::new();
        for row in scored {
            if !order.contains(&row.corruption) {
                return Err(Error::InvalidConfig(format!("{} is not a row of track {track}", row.corruption)));
            }
            if by_tag.insert(row.corruption, row).is_some() {
                return Err(Error::InvalidConfig("duplicate score row".into()));
            }
        }
        let rows: Vec<ScoreRow> = order
            .into_iter()
            .map(|c| {
                by_tag.remove(&c).unwrap_or(ScoreRow {
                    corruption: c,
                    value: None,
                    samples: 0,
                    details: BTreeMap::new(),
                })
            })
            .collect();
        let present: Vec<f64> = rows.iter().filter_map(|r| r.value).collect();
        let headline = headline(&present);
        if headline.is_none() {
            warnings.push("no corruption row has a score; headline is undefined".into());
        }
        Ok(Self { track, metric: track.metric(), rows, clean, headline, warnings, metadata })
    }

    pub fn row(&self, c: CorruptionType) -> Option<&ScoreRow> {
        self.rows.iter().find(|r| r.corruption == c)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("score tables serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format("score table", e.to_string()))
    }
}
