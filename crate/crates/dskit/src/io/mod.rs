//! Raster file formats.

mod hdr;
mod pfm;
mod png;

use std::path::Path;

use dskit_core::panorama::{tonemap_value, HdrPanorama};
use dskit_core::{GrayImage, NormalMap, Raster, RgbImage, Vec3};

use crate::{Error, Result};

pub use self::hdr::{read_hdr, write_hdr};
pub use self::pfm::{read_pfm, write_pfm, PfmImage};
pub use self::png::{read_png, write_png, PngImage};

/// Loads a panorama from `.hdr`/`.pic` (RGBE) or `.pfm`.
pub fn load_panorama(path: &Path) -> Result<HdrPanorama> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let img = match ext.as_deref() {
        Some("hdr") | Some("pic") => read_hdr(path)?,
        Some("pfm") => read_pfm(path)?.into_rgb(),
        _ => return Err(Error::format(path, "expected a .hdr or .pfm panorama")),
    };
    HdrPanorama::new(img).map_err(|e| Error::format(path, e.to_string()))
}

pub fn is_panorama_file(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("hdr") | Some("pic") | Some("pfm")
    )
}

/// `round(255·c)` with clamping.
#[inline]
pub fn quantize(c: f32) -> u8 {
    (255.0 * c.clamp(0.0, 1.0)).round() as u8
}

pub fn read_gray_pfm(path: &Path) -> Result<GrayImage> {
    let pfm = read_pfm(path)?;
    if pfm.channels != 1 {
        return Err(Error::format(path, "expected a single-channel PFM"));
    }
    Ok(pfm.into_gray())
}

pub fn read_normals_pfm(path: &Path) -> Result<NormalMap> {
    let pfm = read_pfm(path)?;
    if pfm.channels != 3 {
        return Err(Error::format(path, "expected a 3-channel normal PFM"));
    }
    Ok(pfm
        .into_rgb()
        .map(|n| Vec3::new(n[0] as f64, n[1] as f64, n[2] as f64)))
}

pub fn write_gray_pfm(path: &Path, img: &GrayImage) -> Result<()> {
    write_pfm(path, &PfmImage::from_gray(img))
}

pub fn write_rgb_pfm(path: &Path, img: &RgbImage) -> Result<()> {
    write_pfm(path, &PfmImage::from_rgb(img))
}

pub fn write_normals_pfm(path: &Path, normals: &NormalMap) -> Result<()> {
    write_rgb_pfm(path, &normals_to_rgb(normals))
}

pub fn normals_to_rgb(normals: &NormalMap) -> RgbImage {
    normals.map(|n| [n.x as f32, n.y as f32, n.z as f32])
}

/// 8-bit RGB bytes of an LDR image already in `[0, 1)`.
pub fn ldr_bytes(img: &RgbImage) -> Vec<u8> {
    img.channels().map(quantize).collect()
}

/// Writes an LDR image (already tonemapped) as sRGB PNG.
pub fn write_ldr_png(path: &Path, img: &RgbImage) -> Result<()> {
    write_png(
        path,
        &PngImage::rgb(img.width(), img.height(), ldr_bytes(img)),
    )
}

/// γ-encoded grayscale PNG of a linear map in `[0, 1]`.
pub fn write_shading_png(path: &Path, shading: &GrayImage) -> Result<()> {
    let bytes = shading
        .as_slice()
        .iter()
        .map(|s| quantize(tonemap_value(*s)))
        .collect();
    write_png(
        path,
        &PngImage::gray(shading.width(), shading.height(), bytes),
    )
}

/// Normal visualization, `n·0.5 + 0.5`.
pub fn write_normals_png(path: &Path, normals: &NormalMap) -> Result<()> {
    let bytes = normals
        .as_slice()
        .iter()
        .flat_map(|n| n.to_array())
        .map(|c| quantize((c * 0.5 + 0.5) as f32))
        .collect();
    write_png(
        path,
        &PngImage::rgb(normals.width(), normals.height(), bytes),
    )
}

pub(crate) fn rgb_from_interleaved(width: usize, height: usize, data: &[f32]) -> RgbImage {
    Raster::from_fn(width, height, |x, y| {
        let i = 3 * (y * width + x);
        [data[i], data[i + 1], data[i + 2]]
    })
}
