//! Latitude-longitude HDR panoramas: direction mapping, sun detection,
//! perspective crops and radiometric normalization.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::math::{self, luminance, Mat3, Vec3};
use crate::raster::{Raster, RgbImage};

/// Max/median luminance ratio below which a sun estimate is flagged.
pub const LOW_CONFIDENCE_RATIO: f64 = 10.0;

/// Upper clip for LDR values, `1 − 2⁻¹⁶`.
pub const LDR_MAX: f32 = 1.0 - 1.0 / 65536.0;

/// Display gamma used for LDR conversion.
pub const GAMMA: f64 = 2.2;

/// Linear-radiance equirectangular panorama, `width = 2 × height`.
///
/// Pixel `(i, j)` sits at `u = i / W`, `v = j / (H − 1)`: the first and last rows
/// are the poles and columns wrap around in azimuth.
#[derive(Debug, Clone, PartialEq)]
pub struct HdrPanorama {
    radiance: RgbImage,
}

impl HdrPanorama {
    pub fn new(radiance: RgbImage) -> Result<Self> {
        let (w, h) = radiance.shape();
        if h < 2 || w != 2 * h {
            return Err(Error::InvalidPanorama(format!(
                "expected width = 2 × height with height ≥ 2, got {w}×{h}"
            )));
        }
        if let Some(i) = radiance
            .as_slice()
            .iter()
            .position(|p| p.iter().any(|c| !c.is_finite() || *c < 0.0))
        {
            return Err(Error::InvalidPanorama(format!(
                "pixel ({}, {}) is negative or non-finite",
                i % w,
                i / w
            )));
        }
        Ok(Self { radiance })
    }

    pub fn width(&self) -> usize {
        self.radiance.width()
    }

    pub fn height(&self) -> usize {
        self.radiance.height()
    }

    pub fn radiance(&self) -> &RgbImage {
        &self.radiance
    }

    pub fn into_radiance(self) -> RgbImage {
        self.radiance
    }

    /// Lat-long coordinates of pixel `(i, j)`.
    pub fn pixel_uv(&self, i: usize, j: usize) -> (f64, f64) {
        (
            i as f64 / self.width() as f64,
            j as f64 / (self.height() - 1) as f64,
        )
    }

    /// Bilinear lookup with horizontal wrap and vertical clamp.
    pub fn sample(&self, dir: Vec3) -> [f32; 3] {
        let (u, v) = uv_from_direction(dir);
        let w = self.width();
        let h = self.height();
        let x = u * w as f64;
        let y = (v * (h - 1) as f64).clamp(0.0, (h - 1) as f64);
        let x0f = math::floor(x);
        let y0f = math::floor(y);
        let fx = x - x0f;
        let fy = y - y0f;
        let x0 = (x0f as i64).rem_euclid(w as i64) as usize;
        let x1 = (x0 + 1) % w;
        let y0 = (y0f as usize).min(h - 1);
        let y1 = (y0 + 1).min(h - 1);
        let p00 = self.radiance.get(x0, y0);
        let p10 = self.radiance.get(x1, y0);
        let p01 = self.radiance.get(x0, y1);
        let p11 = self.radiance.get(x1, y1);
        let mut out = [0.0f32; 3];
        for c in 0..3 {
            let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
            let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
            out[c] = (top * (1.0 - fy) + bottom * fy) as f32;
        }
        out
    }

    /// Rotates the panorama about the vertical axis by `columns` pixels,
    /// i.e. by `2π · columns / W` in azimuth.
    pub fn rotate_columns(&self, columns: isize) -> HdrPanorama {
        let w = self.width() as isize;
        let radiance = Raster::from_fn(self.width(), self.height(), |x, y| {
            let src = (x as isize - columns).rem_euclid(w) as usize;
            *self.radiance.get(src, y)
        });
        HdrPanorama { radiance }
    }

    pub fn scaled(&self, k: f32) -> HdrPanorama {
        HdrPanorama {
            radiance: self.radiance.map(|p| [p[0] * k, p[1] * k, p[2] * k]),
        }
    }
}

/// Unit direction for lat-long coordinates (Y-up, φ from +Z toward +X).
pub fn direction_from_uv(u: f64, v: f64) -> Vec3 {
    let phi = 2.0 * PI * u - PI;
    let theta = PI * v;
    let st = math::sin(theta);
    Vec3::new(st * math::sin(phi), math::cos(theta), st * math::cos(phi))
}

/// Inverse of [`direction_from_uv`]; `u ∈ [0, 1)`, `v ∈ [0, 1]`.
pub fn uv_from_direction(dir: Vec3) -> (f64, f64) {
    let d = dir.normalized();
    let theta = math::acos(d.y.clamp(-1.0, 1.0));
    let phi = math::atan2(d.x, d.z);
    let mut u = (phi + PI) / (2.0 * PI);
    if u >= 1.0 {
        u -= 1.0;
    }
    (u, theta / PI)
}

/// Result of brightest-pixel sun detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SunEstimate {
    pub direction: Vec3,
    pub pixel: (usize, usize),
    pub luminance: f64,
    /// Peak over median luminance.
    pub peak_ratio: f64,
    /// Set when `peak_ratio < LOW_CONFIDENCE_RATIO` (overcast or sunless scenes).
    pub low_confidence: bool,
}

/// Direction of the maximal-luminance pixel; ties go to the first pixel in
/// row-major order.
pub fn detect_sun_direction(pano: &HdrPanorama) -> Result<SunEstimate> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in pano.radiance.as_slice().iter().enumerate() {
        let l = luminance(*p);
        if best.is_none_or(|(_, b)| l > b) {
            best = Some((i, l));
        }
    }
    let (idx, peak) = match best {
        Some(b) if b.1 > 0.0 => b,
        _ => return Err(Error::NoLightFound),
    };
    let w = pano.width();
    let (i, j) = (idx % w, idx / w);
    let (u, v) = pano.pixel_uv(i, j);

    let mut lums: Vec<f64> = pano
        .radiance
        .as_slice()
        .iter()
        .map(|p| luminance(*p))
        .collect();
    let mid = lums.len() / 2;
    let (_, median, _) = lums.select_nth_unstable_by(mid, f64::total_cmp);
    let peak_ratio = if *median > 0.0 {
        peak / *median
    } else {
        f64::INFINITY
    };

    Ok(SunEstimate {
        direction: direction_from_uv(u, v),
        pixel: (i, j),
        luminance: peak,
        peak_ratio,
        low_confidence: peak_ratio < LOW_CONFIDENCE_RATIO,
    })
}

/// Virtual camera for a square perspective crop. Angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CropParams {
    pub vertical_fov: f64,
    pub azimuth: f64,
    pub elevation: f64,
    pub roll: f64,
    pub resolution: usize,
}

impl CropParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.vertical_fov > 0.0 && self.vertical_fov < 180.0) {
            return Err(invalid("vertical_fov", "must lie in (0, 180) degrees"));
        }
        if self.resolution == 0 {
            return Err(invalid("resolution", "must be at least 1"));
        }
        if !(self.azimuth.is_finite() && self.elevation.is_finite() && self.roll.is_finite()) {
            return Err(invalid("azimuth/elevation/roll", "must be finite"));
        }
        Ok(())
    }

    /// Focal length in pixels, `(H/2) / tan(vfov/2)`.
    pub fn focal_px(&self) -> f64 {
        (self.resolution as f64 / 2.0) / math::tan(math::to_radians(self.vertical_fov) / 2.0)
    }

    /// Maps camera-frame vectors (+X right, +Y down, +Z forward) to world
    /// directions: yaw by azimuth, then pitch by elevation, then roll.
    pub fn camera_to_world(&self) -> Mat3 {
        let (sa, ca) = sincos_deg(self.azimuth);
        let (se, ce) = sincos_deg(self.elevation);
        let (sr, cr) = sincos_deg(self.roll);
        let yaw = Mat3([[ca, 0.0, sa], [0.0, 1.0, 0.0], [-sa, 0.0, ca]]);
        let pitch = Mat3([[1.0, 0.0, 0.0], [0.0, ce, se], [0.0, -se, ce]]);
        let roll = Mat3([[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]]);
        let flip_y = Mat3::from_diagonal([1.0, -1.0, 1.0]);
        yaw * pitch * roll * flip_y
    }

    /// Inverse of [`CropParams::camera_to_world`].
    pub fn world_to_camera(&self) -> Mat3 {
        self.camera_to_world().transpose()
    }

    /// Unit camera-frame ray through the center of pixel `(x, y)`.
    pub fn pixel_ray(&self, x: usize, y: usize) -> Vec3 {
        let f = self.focal_px();
        let c = self.resolution as f64 / 2.0;
        Vec3::new((x as f64 + 0.5 - c) / f, (y as f64 + 0.5 - c) / f, 1.0).normalized()
    }
}

fn sincos_deg(deg: f64) -> (f64, f64) {
    let r = math::to_radians(deg);
    (math::sin(r), math::cos(r))
}

/// Resamples the panorama through a pinhole camera. Output stays linear.
pub fn crop_perspective(pano: &HdrPanorama, cam: &CropParams) -> Result<RgbImage> {
    cam.validate()?;
    let rot = cam.camera_to_world();
    let n = cam.resolution;
    Ok(Raster::from_fn_rows(n, n, |x, y| {
        pano.sample(rot * cam.pixel_ray(x, y))
    }))
}

/// Output of [`normalize_mean_intensity`].
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub image: RgbImage,
    pub scale: f64,
}

/// Target mean over all channel values.
pub const TARGET_MEAN: f64 = 0.5;

/// Scales the image so the mean over all channel values is 0.5.
pub fn normalize_mean_intensity(img: &RgbImage) -> Result<Normalized> {
    let count = img.len() * 3;
    if count == 0 {
        return Err(Error::DegenerateExposure);
    }
    let sum: f64 = img.channels().map(f64::from).sum();
    let has_light = img.as_slice().iter().any(|p| luminance(*p) > 0.0);
    if !has_light || !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::DegenerateExposure);
    }
    let scale = TARGET_MEAN / (sum / count as f64);
    let image = img.map(|p| {
        [
            (p[0] as f64 * scale) as f32,
            (p[1] as f64 * scale) as f32,
            (p[2] as f64 * scale) as f32,
        ]
    });
    Ok(Normalized { image, scale })
}

/// Gamma-encodes one linear value and clips to `[0, 1 − 2⁻¹⁶]`.
#[inline]
pub fn tonemap_value(v: f32) -> f32 {
    if !(v > 0.0) {
        return 0.0;
    }
    let g = math::pow(v as f64, 1.0 / GAMMA) as f32;
    g.min(LDR_MAX)
}

/// γ = 2.2 encoding with half-open clip. Apply exactly once per image.
pub fn tonemap_ldr(img: &RgbImage) -> RgbImage {
    img.map(|p| {
        [
            tonemap_value(p[0]),
            tonemap_value(p[1]),
            tonemap_value(p[2]),
        ]
    })
}
