use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use png::{BitDepth, ColorType, SrgbRenderingIntent};

use crate::{Error, Result};

/// 8-bit grayscale or RGB pixels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PngImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

impl PngImage {
    pub fn rgb(width: usize, height: usize, data: Vec<u8>) -> Self {
        Self {
            width,
            height,
            channels: 3,
            data,
        }
    }

    pub fn gray(width: usize, height: usize, data: Vec<u8>) -> Self {
        Self {
            width,
            height,
            channels: 1,
            data,
        }
    }
}

/// Writes an sRGB-tagged 8-bit PNG.
pub fn write_png(path: &Path, img: &PngImage) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), img.width as u32, img.height as u32);
    enc.set_color(if img.channels == 1 {
        ColorType::Grayscale
    } else {
        ColorType::Rgb
    });
    enc.set_depth(BitDepth::Eight);
    enc.set_source_srgb(SrgbRenderingIntent::Perceptual);
    let fail = |e: png::EncodingError| Error::format(path, e.to_string());
    let mut writer = enc.write_header().map_err(fail)?;
    writer.write_image_data(&img.data).map_err(fail)?;
    writer.finish().map_err(fail)
}

pub fn read_png(path: &Path) -> Result<PngImage> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let fail = |e: png::DecodingError| Error::format(path, e.to_string());
    let mut reader = png::Decoder::new(BufReader::new(file))
        .read_info()
        .map_err(fail)?;
    let mut data = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut data).map_err(fail)?;
    let channels = match info.color_type {
        ColorType::Grayscale => 1,
        ColorType::Rgb => 3,
        other => {
            return Err(Error::format(
                path,
                format!("unsupported PNG color type {other:?}"),
            ))
        }
    };
    if info.bit_depth != BitDepth::Eight {
        return Err(Error::format(path, "expected 8-bit PNG"));
    }
    data.truncate(info.buffer_size());
    Ok(PngImage {
        width: info.width as usize,
        height: info.height as usize,
        channels,
        data,
    })
}
