//! `.bin` point clouds: five little-endian f32 per point (x, y, z,
//! intensity, ring). A missing ring is stored as -1.

use std::path::Path;

use crate::error::{Error, Result};
use crate::lidar::{Point, PointCloud};

pub const POINT_STRIDE: usize = 20;
pub const NO_RING: f32 = -1.0;

/// Largest ring index an f32 represents exactly.
const MAX_RING: f32 = 16_777_216.0;

pub fn decode_pointcloud(bytes: &[u8]) -> Result<PointCloud> {
    if !bytes.len().is_multiple_of(POINT_STRIDE) {
        return Err(Error::format(
            "point cloud",
            format!("{} bytes is not a multiple of {POINT_STRIDE}", bytes.len()),
        ));
    }
    let points = bytes
        .chunks_exact(POINT_STRIDE)
        .enumerate()
        .map(|(i, rec)| {
            let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().expect("4 bytes"));
            let (x, y, z, intensity, ring) = (f(0), f(1), f(2), f(3), f(4));
            if ![x, y, z, intensity].iter().all(|v| v.is_finite()) {
                return Err(Error::format("point cloud", format!("point {i} has a non-finite value")));
            }
            let ring = if ring == NO_RING {
                None
            } else if (0.0..MAX_RING).contains(&ring) && ring.fract() == 0.0 {
                Some(ring as u32)
            } else {
                return Err(Error::format("point cloud", format!("point {i} has invalid ring {ring}")));
            };
            Ok(Point { x, y, z, intensity, ring })
        })
        .collect::<Result<Vec<_>>>()?;
    PointCloud::new(points)
}

pub fn encode_pointcloud(pc: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(pc.len() * POINT_STRIDE);
    for p in pc.points() {
        let ring = p.ring.map_or(NO_RING, |r| r as f32);
        for v in [p.x, p.y, p.z, p.intensity, ring] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_pointcloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pointcloud(&bytes).map_err(|e| match e {
        Error::Format { what, msg } => Error::format(what, format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_pointcloud(pc: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pointcloud(pc)).map_err(|e| Error::io(path, e))
}
