//! 8-bit RGB PNG images and 16-bit grayscale depth PNGs.

use std::io::Cursor;
use std::path::Path;

use image::codecs::png::{CompressionType, FilterType, PngDecoder, PngEncoder};
use image::{ColorType, ExtendedColorType, ImageDecoder, ImageEncoder, Limits};

use crate::camera::Image;
use crate::depth::DepthMap;
use crate::error::{Error, Result};

/// 16-bit depth PNGs store metres × 256.
pub const DEPTH_PNG_SCALE: f64 = 256.0;

pub const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

const MAX_SIDE: u32 = 16_384;
const MAX_ALLOC: u64 = 1 << 30;

fn decoder(bytes: &[u8]) -> Result<PngDecoder<Cursor<&[u8]>>> {
    let mut dec = PngDecoder::new(Cursor::new(bytes)).map_err(|e| Error::format("PNG", e.to_string()))?;
    let mut limits = Limits::default();
    limits.max_image_width = Some(MAX_SIDE);
    limits.max_image_height = Some(MAX_SIDE);
    limits.max_alloc = Some(MAX_ALLOC);
    dec.set_limits(limits).map_err(|e| Error::format("PNG", e.to_string()))?;
    Ok(dec)
}

fn pixels(dec: PngDecoder<Cursor<&[u8]>>) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; dec.total_bytes() as usize];
    dec.read_image(&mut buf).map_err(|e| Error::format("PNG", e.to_string()))?;
    Ok(buf)
}

pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    let dec = decoder(bytes)?;
    let color = dec.color_type();
    if color != ColorType::Rgb8 {
        return Err(Error::InvalidImage(format!(
            "PNG is {color:?}; expected 8-bit RGB (convert with e.g. `magick in.png -type TrueColor -depth 8 PNG24:out.png`)"
        )));
    }
    let (w, h) = dec.dimensions();
    Image::new(w, h, pixels(dec)?)
}

pub fn encode_image(img: &Image) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    PngEncoder::new_with_quality(&mut out, CompressionType::Default, FilterType::Adaptive)
        .write_image(img.data(), img.width(), img.height(), ExtendedColorType::Rgb8)
        .map_err(|e| Error::Internal(format!("PNG encode: {e}")))?;
    Ok(out)
}

pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| match e {
        Error::Format { what, msg } => Error::format(what, format!("{}: {msg}", path.display())),
        Error::InvalidImage(msg) => Error::InvalidImage(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_image(img)?).map_err(|e| Error::io(path, e))
}

/// Decode a 16-bit grayscale PNG into metres; 0 stays 0 (invalid).
pub fn decode_depth_png(bytes: &[u8]) -> Result<DepthMap> {
    let dec = decoder(bytes)?;
    let color = dec.color_type();
    if color != ColorType::L16 {
        return Err(Error::InvalidImage(format!(
            "depth PNG is {color:?}; expected 16-bit grayscale holding metres x {DEPTH_PNG_SCALE}"
        )));
    }
    let (w, h) = dec.dimensions();
    let raw = pixels(dec)?;
    let values = raw
        .chunks_exact(2)
        .map(|c| u16::from_ne_bytes([c[0], c[1]]) as f64 / DEPTH_PNG_SCALE)
        .collect();
    DepthMap::new(w, h, values)
}

/// Encode metres as a 16-bit PNG, rounding to 1/256 m and saturating.
pub fn encode_depth_png(depth: &DepthMap) -> Result<Vec<u8>> {
    let raw: Vec<u8> = depth
        .values()
        .iter()
        .flat_map(|&v| {
            let q = if v.is_finite() { (v * DEPTH_PNG_SCALE).round().clamp(0.0, u16::MAX as f64) } else { 0.0 };
            (q as u16).to_ne_bytes()
        })
        .collect();
    let mut out = Vec::new();
    PngEncoder::new_with_quality(&mut out, CompressionType::Default, FilterType::Adaptive)
        .write_image(&raw, depth.width(), depth.height(), ExtendedColorType::L16)
        .map_err(|e| Error::Internal(format!("PNG encode: {e}")))?;
    Ok(out)
}
