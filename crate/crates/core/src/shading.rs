//! Cosine term and direct-shading composition.

use crate::error::{invalid, Result};
use crate::geometry::NormalMap;
use crate::raster::GrayImage;
use crate::volume::{DirectionalLight, ShadowMap};

/// Grayscale direct shading in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadingMap(GrayImage);

impl ShadingMap {
    pub fn new(s: GrayImage) -> Result<Self> {
        if s.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid("shading map", "values must lie in [0, 1]"));
        }
        Ok(Self(s))
    }

    pub fn raster(&self) -> &GrayImage {
        &self.0
    }

    pub fn into_raster(self) -> GrayImage {
        self.0
    }
}

/// Clamped Lambert term `max(0, n·l)`.
pub fn ndotl(normals: &NormalMap, light: &DirectionalLight) -> GrayImage {
    normals.map(|n| (n.dot(light.direction).max(0.0) as f32).min(1.0))
}

/// `s = c · T` per pixel. Cosine values are clamped to `[0, 1]` first.
pub fn compose_direct_shading(cosine: &GrayImage, shadow: &ShadowMap) -> Result<ShadingMap> {
    shadow.raster().ensure_shape(cosine.shape())?;
    let mut out = cosine.clone();
    for (s, t) in out
        .as_mut_slice()
        .iter_mut()
        .zip(shadow.raster().as_slice())
    {
        *s = s.clamp(0.0, 1.0) * t;
    }
    Ok(ShadingMap(out))
}
