//! Submission JSON-lines.
//!
//! Line 1 is a header naming the track and the submitter:
//!
//! ```json
//! {"schema_version": 1, "track": "bev_detection", "team": "t", "method": "m", "submitted_at": "2024-05-01T12:00:00Z"}
//! ```
//!
//! Detection tracks follow with one box per line (`sample_id`,
//! `translation`, `size`, `yaw`, `velocity`, `class_name`, `attribute`,
//! `score`). Grid and depth tracks follow with one line per sample,
//! `{"sample_id": ..., "path": ...}` or `{"sample_id": ..., "data": <base64>}`,
//! pointing at an `RBGRID1` container or a 16-bit depth PNG.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::detection::DetBox;
use crate::error::{Error, Result};
use crate::io::manifest::Manifest;
use crate::seed::SampleId;
use crate::track::Track;

pub const SUBMISSION_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmissionHeader {
    pub schema_version: u32,
    pub track: Track,
    pub team: String,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submitted_at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DenseSource {
    Path(PathBuf),
    Data(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseRecord {
    /// 1-based line number, for diagnostics.
    pub line: usize,
    pub sample_id: SampleId,
    pub source: DenseSource,
}

impl DenseRecord {
    pub fn bytes(&self) -> Result<Vec<u8>> {
        match &self.source {
            DenseSource::Data(d) => Ok(d.clone()),
            DenseSource::Path(p) => std::fs::read(p).map_err(|e| Error::io(p, e)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predictions {
    /// Boxes with their 1-based line numbers.
    Detection(Vec<(usize, DetBox)>),
    Dense(Vec<DenseRecord>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Submission {
    pub header: SubmissionHeader,
    pub predictions: Predictions,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DenseLine {
    sample_id: SampleId,
    #[serde(default)]
    path: Option<String>,
    #[serde(default)]
    data: Option<String>,
}

/// Where dense predictions may come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathPolicy<'a> {
    /// Resolve `path` records against this directory.
    RelativeTo(&'a Path),
    /// Only inline `data` records are accepted (untrusted uploads).
    InlineOnly,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Submission { record: line, msg: msg.into() }
}

pub fn parse_submission(path: impl AsRef<Path>, track: Track) -> Result<Submission> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_submission_str(&text, track, PathPolicy::RelativeTo(base))
}

pub fn parse_submission_str(text: &str, track: Track, policy: PathPolicy<'_>) -> Result<Submission> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, htext) = lines.next().ok_or_else(|| err(1, "empty submission, expected a header line"))?;
    let header: SubmissionHeader =
        serde_json::from_str(htext).map_err(|e| err(hline, format!("invalid header: {e}")))?;
    if header.schema_version != SUBMISSION_SCHEMA_VERSION {
        return Err(err(hline, format!("unsupported schema_version {}", header.schema_version)));
    }
    if header.track != track {
        return Err(Error::TrackMismatch { expected: track.to_string(), found: header.track.to_string() });
    }
    for (field, v) in [("team", &header.team), ("method", &header.method)] {
        if v.trim().is_empty() || v.len() > 200 || v.chars().any(char::is_control) {
            return Err(err(hline, format!("header field `{field}` must be 1-200 printable characters")));
        }
    }

    let predictions = if track.is_detection() {
        let mut boxes = Vec::new();
        for (line, l) in lines {
            let b: DetBox = serde_json::from_str(l).map_err(|e| err(line, e.to_string()))?;
            b.validate().map_err(|m| err(line, m))?;
            boxes.push((line, b));
        }
        Predictions::Detection(boxes)
    } else {
        let mut seen = HashSet::new();
        let mut records = Vec::new();
        for (line, l) in lines {
            let d: DenseLine = serde_json::from_str(l).map_err(|e| err(line, e.to_string()))?;
            if !seen.insert(d.sample_id.clone()) {
                return Err(err(line, format!("duplicate prediction for sample `{}`", d.sample_id)));
            }
            let source = match (d.path, d.data, policy) {
                (Some(_), Some(_), _) | (None, None, _) => {
                    return Err(err(line, "exactly one of `path` or `data` is required"))
                }
                (Some(_), None, PathPolicy::InlineOnly) => {
                    return Err(err(line, "`path` records are not accepted here; inline the file as `data`"))
                }
                (Some(p), None, PathPolicy::RelativeTo(base)) => {
                    let p = PathBuf::from(p);
                    DenseSource::Path(if p.is_relative() { base.join(p) } else { p })
                }
                (None, Some(b64), _) => DenseSource::Data(
                    base64::engine::general_purpose::STANDARD
                        .decode(b64.as_bytes())
                        .map_err(|e| err(line, format!("invalid base64: {e}")))?,
                ),
            };
            records.push(DenseRecord { line, sample_id: d.sample_id, source });
        }
        Predictions::Dense(records)
    };
    Ok(Submission { header, predictions })
}

impl Submission {
    /// Every referenced sample must be in the manifest, and on the depth track
    /// every manifest sample needs a prediction (there is no neutral score).
    pub fn check_against(&self, manifest: &Manifest) -> Result<()> {
        if manifest.track != self.header.track {
            return Err(Error::TrackMismatch {
                expected: manifest.track.to_string(),
                found: self.header.track.to_string(),
            });
        }
        let ids: HashSet<&SampleId> = manifest.samples.iter().map(|s| &s.id).collect();
        let refs: Box<dyn Iterator<Item = (usize, &SampleId)>> = match &self.predictions {
            Predictions::Detection(b) => Box::new(b.iter().map(|(l, b)| (*l, &b.sample_id))),
            Predictions::Dense(d) => Box::new(d.iter().map(|r| (r.line, &r.sample_id))),
        };
        for (line, id) in refs {
            if !ids.contains(id) {
                return Err(err(line, format!("sample `{id}` is not in the manifest")));
            }
        }
        if let Predictions::Detection(boxes) = &self.predictions {
            let classes: HashSet<&str> = manifest.classes.iter().map(String::as_str).collect();
            if let Some((line, b)) = boxes.iter().find(|(_, b)| !classes.contains(b.class_name.as_str())) {
                return Err(err(*line, format!("unknown class `{}`", b.class_name)));
            }
        }
        if let (Track::Depth, Predictions::Dense(records)) = (manifest.track, &self.predictions) {
            let predicted: HashSet<&SampleId> = records.iter().map(|r| &r.sample_id).collect();
            if let Some(s) = manifest.samples.iter().find(|s| !predicted.contains(&s.id)) {
                return Err(Error::MissingPrediction(s.id.to_string()));
            }
        }
        Ok(())
    }
}

/// Render a submission back to JSON-lines with inline dense data.
pub fn write_submission_str(header: &SubmissionHeader, predictions: &Predictions) -> Result<String> {
    let mut out = serde_json::to_string(header).map_err(|e| Error::Internal(e.to_string()))?;
    out.push('\n');
    match predictions {
        Predictions::Detection(boxes) => {
            for (_, b) in boxes {
                out.push_str(&serde_json::to_string(b).map_err(|e| Error::Internal(e.to_string()))?);
                out.push('\n');
            }
        }
        Predictions::Dense(records) => {
            for r in records {
                let data = base64::engine::general_purpose::STANDARD.encode(r.bytes()?);
                let line = serde_json::json!({"sample_id": r.sample_id, "data": data});
                out.push_str(&line.to_string());
                out.push('\n');
            }
        }
    }
    Ok(out)
}
