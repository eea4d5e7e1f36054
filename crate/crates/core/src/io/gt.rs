//! Per-sample ground-truth files for the detection, grid and depth tracks.

use std::path::Path;

use crate::depth::DepthMap;
use crate::detection::GtBox;
use crate::error::{Error, Result};
use crate::io::container::{GridFile, GRID_MAGIC};
use crate::io::png::{decode_depth_png, PNG_SIGNATURE};
use crate::seed::SampleId;

/// JSON-lines of boxes; every box must belong to `sample`.
pub fn decode_gt_boxes(text: &str, sample: &SampleId) -> Result<Vec<GtBox>> {
    let mut boxes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |m: String| Error::format("ground-truth boxes", format!("line {}: {m}", i + 1));
        let b: GtBox = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        b.validate().map_err(bad)?;
        if &b.sample_id != sample {
            return Err(bad(format!("box belongs to `{}`, expected `{sample}`", b.sample_id)));
        }
        boxes.push(b);
    }
    Ok(boxes)
}

pub fn read_gt_boxes(path: &Path, sample: &SampleId) -> Result<Vec<GtBox>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_gt_boxes(&text, sample).map_err(|e| with_path(e, path))
}

/// Dense data is either an `RBGRID1` container or a 16-bit depth PNG.
#[derive(Debug, Clone, PartialEq)]
pub enum DenseData {
    Grid(GridFile),
    Depth(DepthMap),
}

pub fn decode_dense(bytes: &[u8]) -> Result<DenseData> {
    if bytes.starts_with(GRID_MAGIC) {
        GridFile::decode(bytes).map(DenseData::Grid)
    } else if bytes.starts_with(&PNG_SIGNATURE) {
        decode_depth_png(bytes).map(DenseData::Depth)
    } else {
        Err(Error::format("dense data", "neither an RBGRID1 container nor a PNG"))
    }
}

/// A depth map from either dense encoding.
pub fn decode_depth(bytes: &[u8]) -> Result<DepthMap> {
    match decode_dense(bytes)? {
        DenseData::Depth(d) => Ok(d),
        DenseData::Grid(g) => g.to_depth(),
    }
}

pub fn read_dense(path: &Path) -> Result<DenseData> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dense(&bytes).map_err(|e| with_path(e, path))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Format { what, msg } => Error::format(what, format!("{}: {msg}", path.display())),
        Error::InvalidImage(msg) => Error::InvalidImage(format!("{}: {msg}", path.display())),
        other => other,
    }
}
