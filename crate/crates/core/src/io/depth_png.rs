//! 16-bit grayscale PNG depth images. Stored values are multiplied by
//! the per-image depth_scale to get millimeters; 0 stays 0 (invalid).

use thiserror::Error;

use crate::render::DepthMap;
use crate::{Depth, Real};

#[derive(Debug, Error)]
pub enum DepthPngError {
    #[error("unsupported bit depth {bit_depth}; depth images must be 16-bit")]
    UnsupportedBitDepth { bit_depth: u8 },
    #[error("unsupported color type {color_type:?}; depth images must be single-channel grayscale")]
    UnsupportedColorType { color_type: String },
    #[error("decode: {0}")]
    Decode(String),
    #[error("encode: {0}")]
    Encode(String),
    #[error("depth value {value} mm does not fit 16 bits at scale {scale}")]
    OutOfRange { value: Real, scale: Real },
}

/// Decodes a 16-bit single-channel PNG into a depth map in millimeters.
pub fn load_depth(bytes: &[u8], depth_scale: Real) -> Result<Depth, DepthPngError> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| DepthPngError::Decode(e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err(DepthPngError::UnsupportedColorType {
            color_type: format!("{:?}", info.color_type),
        });
    }
    if info.bit_depth != png::BitDepth::Sixteen {
        return Err(DepthPngError::UnsupportedBitDepth {
            bit_depth: match info.bit_depth {
                png::BitDepth::One => 1,
                png::BitDepth::Two => 2,
                png::BitDepth::Four => 4,
                png::BitDepth::Eight => 8,
                png::BitDepth::Sixteen => 16,
            },
        });
    }
    let mut buf = vec![0; reader.output_buffer_size()];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| DepthPngError::Decode(e.to_string()))?;
    let (width, height) = (frame.width, frame.height);
    let n = width as usize * height as usize;
    // Samples are big-endian u16 per the PNG spec.
    let values: Vec<Real> = buf[..n * 2]
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]) as Real * depth_scale)
        .collect();
    DepthMap::new(width, height, values).map_err(|e| DepthPngError::Decode(e.to_string()))
}

/// Encodes a depth map as a 16-bit grayscale PNG; millimeter values are
/// divided by `depth_scale` and rounded to the nearest integer.
pub fn write_depth(depth: &Depth, depth_scale: Real) -> Result<Vec<u8>, DepthPngError> {
    let mut raw = Vec::with_capacity(depth.values().len() * 2);
    for &v in depth.values() {
        let scaled = (v / depth_scale).round();
        if !(0.0..=u16::MAX as Real).contains(&scaled) {
            return Err(DepthPngError::OutOfRange {
                value: v,
                scale: depth_scale,
            });
        }
        raw.extend_from_slice(&(scaled as u16).to_be_bytes());
    }
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, depth.width(), depth.height());
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Sixteen);
        let mut writer = encoder
            .write_header()
            .map_err(|e| DepthPngError::Encode(e.to_string()))?;
        writer
            .write_image_data(&raw)
            .map_err(|e| DepthPngError::Encode(e.to_string()))?;
    }
    Ok(out)
}
