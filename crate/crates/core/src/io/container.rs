//! `RBGRID1` binary container for label grids, probability channels and
//! float depth maps.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size    | field                                   |
//! |--------|---------|-----------------------------------------|
//! | 0      | 7       | magic `RBGRID1`                         |
//! | 7      | 1       | number of dimensions, 2..=4             |
//! | 8      | 1       | dtype: 0 = u8, 1 = u16, 2 = f32         |
//! | 9      | 3       | reserved, zero                          |
//! | 12     | 4       | ignore value (u32)                      |
//! | 16     | 4 × ndim| extents (u32), slowest axis first       |
//! | …      | …       | payload, row-major, exactly the extents |

use std::path::Path;

use crate::depth::DepthMap;
use crate::error::{Error, Result};
use crate::grid::LabelGrid;

pub const GRID_MAGIC: &[u8; 7] = b"RBGRID1";
const HEADER: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum GridPayload {
    U8(Vec<u8>),
    U16(Vec<u16>),
    F32(Vec<f32>),
}

impl GridPayload {
    fn dtype(&self) -> u8 {
        match self {
            GridPayload::U8(_) => 0,
            GridPayload::U16(_) => 1,
            GridPayload::F32(_) => 2,
        }
    }

    fn len(&self) -> usize {
        match self {
            GridPayload::U8(v) => v.len(),
            GridPayload::U16(v) => v.len(),
            GridPayload::F32(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub dims: Vec<u32>,
    pub ignore_value: u32,
    pub payload: GridPayload,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::format("grid container", msg)
}

impl GridFile {
    pub fn new(dims: Vec<u32>, ignore_value: u32, payload: GridPayload) -> Result<Self> {
        if !(2..=4).contains(&dims.len()) {
            return Err(bad(format!("{} dimensions, expected 2 to 4", dims.len())));
        }
        let cells = cell_count(&dims)?;
        if cells != payload.len() {
            return Err(bad(format!("extents {dims:?} need {cells} values, payload has {}", payload.len())));
        }
        Ok(Self { dims, ignore_value, payload })
    }

    pub fn from_labels(grid: &LabelGrid) -> Result<Self> {
        let dims = grid.dims().iter().map(|&d| u32::try_from(d).map_err(|_| bad("extent too large"))).collect::<Result<_>>()?;
        let max = grid.labels().iter().copied().max().unwrap_or(0).max(grid.ignore_value());
        let payload = if max <= u8::MAX as u32 {
            GridPayload::U8(grid.labels().iter().map(|&l| l as u8).collect())
        } else if max <= u16::MAX as u32 {
            GridPayload::U16(grid.labels().iter().map(|&l| l as u16).collect())
        } else {
            return Err(bad("labels exceed 16 bits"));
        };
        Self::new(dims, grid.ignore_value(), payload)
    }

    pub fn from_depth(depth: &DepthMap) -> Result<Self> {
        let values = depth.values().iter().map(|&v| v as f32).collect();
        Self::new(vec![depth.height(), depth.width()], 0, GridPayload::F32(values))
    }

    /// Integer payloads as a label grid.
    pub fn to_labels(&self) -> Result<LabelGrid> {
        let labels = match &self.payload {
            GridPayload::U8(v) => v.iter().map(|&l| l as u32).collect(),
            GridPayload::U16(v) => v.iter().map(|&l| l as u32).collect(),
            GridPayload::F32(_) => return Err(bad("float payload where integer labels were expected")),
        };
        LabelGrid::new(self.dims.iter().map(|&d| d as usize).collect(), labels, self.ignore_value)
    }

    /// A 2-D float payload as a depth map in metres.
    pub fn to_depth(&self) -> Result<DepthMap> {
        let GridPayload::F32(values) = &self.payload else {
            return Err(bad("depth maps need a float payload"));
        };
        let [h, w] = self.dims[..] else {
            return Err(bad(format!("depth maps are 2-D, got extents {:?}", self.dims)));
        };
        DepthMap::new(w, h, values.iter().map(|&v| v as f64).collect())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER + 4 * self.dims.len() + 4 * self.payload.len());
        out.extend_from_slice(GRID_MAGIC);
        out.push(self.dims.len() as u8);
        out.push(self.payload.dtype());
        out.extend_from_slice(&[0; 3]);
        out.extend_from_slice(&self.ignore_value.to_le_bytes());
        for d in &self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        match &self.payload {
            GridPayload::U8(v) => out.extend_from_slice(v),
            GridPayload::U16(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            GridPayload::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER || &bytes[..7] != GRID_MAGIC {
            return Err(bad("missing RBGRID1 header"));
        }
        let ndim = bytes[7] as usize;
        if !(2..=4).contains(&ndim) {
            return Err(bad(format!("{ndim} dimensions, expected 2 to 4")));
        }
        let width = match bytes[8] {
            0 => 1,
            1 => 2,
            2 => 4,
            t => return Err(bad(format!("unknown dtype {t}"))),
        };
        if bytes[9..12] != [0, 0, 0] {
            return Err(bad("reserved header bytes are not zero"));
        }
        let ignore_value = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes"));
        let body = HEADER + 4 * ndim;
        if bytes.len() < body {
            return Err(bad("truncated extents"));
        }
        let dims: Vec<u32> = bytes[HEADER..body]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let cells = cell_count(&dims)?;
        let expected = cells.checked_mul(width).ok_or_else(|| bad("extents overflow"))?;
        let data = &bytes[body..];
        if data.len() != expected {
            return Err(bad(format!("extents {dims:?} need {expected} payload bytes, found {}", data.len())));
        }
        let payload = match bytes[8] {
            0 => GridPayload::U8(data.to_vec()),
            1 => GridPayload::U16(data.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect()),
            _ => GridPayload::F32(
                data.chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                    .collect(),
            ),
        };
        Self::new(dims, ignore_value, payload)
    }
}

fn cell_count(dims: &[u32]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
        .ok_or_else(|| bad("extents overflow"))
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<GridFile> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    GridFile::decode(&bytes).map_err(|e| match e {
        Error::Format { what, msg } => Error::format(what, format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_grid(grid: &GridFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, grid.encode()).map_err(|e| Error::io(path, e))
}
