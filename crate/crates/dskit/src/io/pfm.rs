//! Portable float map. Rows are stored bottom-to-top; a negative scale means
//! little-endian samples. We always write little-endian with scale −1.0.

use std::fs;
use std::path::Path;

use dskit_core::{GrayImage, Raster, RgbImage};

use crate::{Error, Result};

/// Decoded PFM, rows top-to-bottom, channels interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct PfmImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl PfmImage {
    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            channels: 1,
            data: img.as_slice().to_vec(),
        }
    }

    pub fn from_rgb(img: &RgbImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            channels: 3,
            data: img.channels().collect(),
        }
    }

    /// Single-channel maps are returned as-is; RGB maps are averaged.
    pub fn into_gray(self) -> GrayImage {
        let data = if self.channels == 1 {
            self.data
        } else {
            self.data
                .chunks_exact(3)
                .map(|c| (c[0] + c[1] + c[2]) / 3.0)
                .collect()
        };
        Raster::from_vec(self.width, self.height, data).expect("validated size")
    }

    /// Single-channel maps are replicated to RGB.
    pub fn into_rgb(self) -> RgbImage {
        if self.channels == 3 {
            super::rgb_from_interleaved(self.width, self.height, &self.data)
        } else {
            Raster::from_vec(
                self.width,
                self.height,
                self.data.iter().map(|v| [*v; 3]).collect(),
            )
            .expect("validated size")
        }
    }
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (*pos > start).then(|| &bytes[start..*pos])
}

pub fn decode_pfm(bytes: &[u8], path: &Path) -> Result<PfmImage> {
    let bad = |r: &str| Error::format(path, format!("invalid PFM: {r}"));
    let mut pos = 0;
    let channels = match next_token(bytes, &mut pos) {
        Some(b"PF") => 3,
        Some(b"Pf") => 1,
        _ => return Err(bad("missing PF/Pf magic")),
    };
    let mut number = |what: &str| -> Result<String> {
        next_token(bytes, &mut pos)
            .and_then(|t| std::str::from_utf8(t).ok())
            .map(str::to_owned)
            .ok_or_else(|| bad(what))
    };
    let width: usize = number("width")?.parse().map_err(|_| bad("width"))?;
    let height: usize = number("height")?.parse().map_err(|_| bad("height"))?;
    let scale: f32 = number("scale")?.parse().map_err(|_| bad("scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(bad("scale must be non-zero"));
    }
    // Exactly one whitespace byte separates the header from the samples.
    pos += 1;
    let count = width * height * channels;
    let body = bytes
        .get(pos..pos + 4 * count)
        .ok_or_else(|| bad("truncated data"))?;
    let little = scale < 0.0;
    let mut data = vec![0.0f32; count];
    let row = width * channels;
    for (i, chunk) in body.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (file_row, col) = (i / row, i % row);
        data[(height - 1 - file_row) * row + col] = v;
    }
    Ok(PfmImage {
        width,
        height,
        channels,
        data,
    })
}

pub fn encode_pfm(img: &PfmImage) -> Vec<u8> {
    let magic = if img.channels == 1 { "Pf" } else { "PF" };
    let mut out = format!("{magic}\n{} {}\n-1.0\n", img.width, img.height).into_bytes();
    let row = img.width * img.channels;
    out.reserve(4 * img.data.len());
    for r in (0..img.height).rev() {
        for v in &img.data[r * row..(r + 1) * row] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_pfm(path: &Path) -> Result<PfmImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes, path)
}

pub fn write_pfm(path: &Path, img: &PfmImage) -> Result<()> {
    assert!(img.channels == 1 || img.channels == 3);
    fs::write(path, encode_pfm(img)).map_err(|e| Error::io(path, e))
}
