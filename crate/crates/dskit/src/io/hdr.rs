use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use image::codecs::hdr::{HdrDecoder, HdrEncoder};
use image::{ImageDecoder, Rgb};

use dskit_core::RgbImage;

use crate::{Error, Result};

/// Reads a Radiance RGBE image as linear RGB.
pub fn read_hdr(path: &Path) -> Result<RgbImage> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder =
        HdrDecoder::new(BufReader::new(file)).map_err(|e| Error::format(path, e.to_string()))?;
    let (w, h) = decoder.dimensions();
    let (w, h) = (w as usize, h as usize);
    let mut buf = vec![0u8; decoder.total_bytes() as usize];
    decoder
        .read_image(&mut buf)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let floats: Vec<f32> = buf
        .chunks_exact(4)
        .map(|b| f32::from_ne_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok(super::rgb_from_interleaved(w, h, &floats))
}

/// Writes linear RGB as run-length encoded RGBE.
pub fn write_hdr(path: &Path, img: &RgbImage) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let pixels: Vec<Rgb<f32>> = img.as_slice().iter().map(|p| Rgb(*p)).collect();
    HdrEncoder::new(BufWriter::new(file))
        .encode(&pixels, img.width(), img.height())
        .map_err(|e| Error::format(path, e.to_string()))
}
