//! `DSKV1` density-volume container.
//!
//! Layout, all little-endian:
//!
//! ```text
//! b"DSKV1"
//! u32 planes, u32 height, u32 width
//! f64 near, f64 far, f64 focal_px
//! f32 sigma[planes][height][width]
//! ```

use std::fs;
use std::path::Path;

use dskit_core::{CameraIntrinsics, DensityVolume, NdcMapping};

use crate::{Error, Result};

pub const MAGIC: &[u8; 5] = b"DSKV1";
const HEADER_LEN: usize = 5 + 3 * 4 + 3 * 8;

pub fn encode_volume(vol: &DensityVolume) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * vol.sigma().len());
    out.extend_from_slice(MAGIC);
    for v in [vol.planes(), vol.height(), vol.width()] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for v in [vol.mapping().near, vol.mapping().far, vol.camera().focal_px] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for s in vol.sigma() {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn decode_volume(bytes: &[u8], path: &Path) -> Result<DensityVolume> {
    let bad = |r: &str| Error::format(path, format!("invalid DSKV1: {r}"));
    if bytes.len() < HEADER_LEN || &bytes[..5] != MAGIC {
        return Err(bad("missing magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (planes, height, width) = (u32_at(5), u32_at(9), u32_at(13));
    let (near, far, focal) = (f64_at(17), f64_at(25), f64_at(33));
    let count = planes
        .checked_mul(height)
        .and_then(|v| v.checked_mul(width))
        .ok_or_else(|| bad("dimensions overflow"))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 4 * count {
        return Err(bad("payload size does not match header"));
    }
    let sigma = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let camera = CameraIntrinsics::new(focal, width, height)?;
    let mapping = NdcMapping::new(near, far)?;
    Ok(DensityVolume::new(camera, mapping, planes, sigma)?)
}

pub fn write_volume(path: &Path, vol: &DensityVolume) -> Result<()> {
    fs::write(path, encode_volume(vol)).map_err(|e| Error::io(path, e))
}

pub fn read_volume(path: &Path) -> Result<DensityVolume> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_volume(&bytes, path)
}
