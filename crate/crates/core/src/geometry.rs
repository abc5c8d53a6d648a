//! Pinhole camera, depth unprojection and normals from point-cloud derivatives.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math::{self, Vec3};
use crate::raster::{GrayImage, Raster};

/// Pinhole intrinsics with the principal point at the image center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub focal_px: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(focal_px: f64, width: usize, height: usize) -> Result<Self> {
        if !(focal_px > 0.0 && focal_px.is_finite()) {
            return Err(invalid("focal_px", "must be positive and finite"));
        }
        if width == 0 || height == 0 {
            return Err(invalid("width/height", "must be at least 1"));
        }
        Ok(Self {
            focal_px,
            width,
            height,
        })
    }

    /// Focal length from a vertical field of view in degrees.
    pub fn from_vertical_fov(vfov_deg: f64, width: usize, height: usize) -> Result<Self> {
        if !(vfov_deg > 0.0 && vfov_deg < 180.0) {
            return Err(invalid("vertical_fov", "must lie in (0, 180) degrees"));
        }
        let f = (height as f64 / 2.0) / math::tan(math::to_radians(vfov_deg) / 2.0);
        Self::new(f, width, height)
    }

    /// Offset of the center of pixel `(x, y)` from the principal point.
    #[inline]
    pub fn pixel_offset(&self, x: usize, y: usize) -> (f64, f64) {
        (
            x as f64 + 0.5 - self.width as f64 / 2.0,
            y as f64 + 0.5 - self.height as f64 / 2.0,
        )
    }

    /// Continuous pixel coordinates (top-left corner = 0) of a camera-frame point.
    #[inline]
    pub fn project(&self, p: Vec3) -> (f64, f64) {
        (
            self.focal_px * p.x / p.z + self.width as f64 / 2.0,
            self.focal_px * p.y / p.z + self.height as f64 / 2.0,
        )
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// Metric depth along the camera axis; every value finite and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap(GrayImage);

impl DepthMap {
    pub fn new(z: GrayImage) -> Result<Self> {
        let w = z.width();
        if let Some(i) = z
            .as_slice()
            .iter()
            .position(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(Error::InvalidDepth {
                x: i % w,
                y: i / w,
                value: z.as_slice()[i],
            });
        }
        Ok(Self(z))
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self> {
        Self::new(Raster::from_fn(width, height, f))
    }

    pub fn raster(&self) -> &GrayImage {
        &self.0
    }

    pub fn into_raster(self) -> GrayImage {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        *self.0.get(x, y)
    }

    /// Multiplies every depth by `k > 0`.
    pub fn scaled(&self, k: f32) -> Result<DepthMap> {
        DepthMap::new(self.0.map(|z| z * k))
    }
}

/// Camera-frame point per pixel.
pub type PointCloud = Raster<Vec3>;

/// Unit, camera-facing normal per pixel.
pub type NormalMap = Raster<Vec3>;

/// `x = u·z/f`, `y = v·z/f`, `z` preserved.
pub fn unproject(depth: &DepthMap, cam: &CameraIntrinsics) -> Result<PointCloud> {
    depth.0.ensure_shape(cam.shape())?;
    Ok(Raster::from_fn(depth.width(), depth.height(), |x, y| {
        let (u, v) = cam.pixel_offset(x, y);
        let z = depth.get(x, y) as f64;
        Vec3::new(u * z / cam.focal_px, v * z / cam.focal_px, z)
    }))
}

const DEGENERATE_CROSS: f64 = 1e-12;

/// Normals as the cross product of the horizontal and vertical point-cloud
/// derivatives: central differences inside, one-sided on the border.
///
/// Normals are flipped to face the camera. Pixels whose cross product is
/// degenerate take the normal of the nearest valid pixel (breadth-first,
/// 4-connected, deterministic).
pub fn estimate_normals(pc: &PointCloud) -> Result<NormalMap> {
    let (w, h) = pc.shape();
    if w < 3 || h < 3 {
        return Err(invalid(
            "point cloud",
            "width and height must be at least 3",
        ));
    }
    let diff = |a: Vec3, b: Vec3, span: f64| (a - b) / span;
    let raw: Vec<Option<Vec3>> = Raster::from_fn_rows(w, h, |x, y| {
        let (xl, xr) = (x.saturating_sub(1), (x + 1).min(w - 1));
        let (yu, yd) = (y.saturating_sub(1), (y + 1).min(h - 1));
        let dx = diff(*pc.get(xr, y), *pc.get(xl, y), (xr - xl) as f64);
        let dy = diff(*pc.get(x, yd), *pc.get(x, yu), (yd - yu) as f64);
        let n = dx.cross(dy);
        let len = n.norm();
        if !(len >= DEGENERATE_CROSS) || !len.is_finite() {
            return None;
        }
        let n = n / len;
        Some(if n.dot(*pc.get(x, y)) > 0.0 { -n } else { n })
    })
    .into_vec();

    fill_nearest(w, h, raw)
}

fn fill_nearest(w: usize, h: usize, raw: Vec<Option<Vec3>>) -> Result<NormalMap> {
    let mut out: Vec<Option<Vec3>> = raw;
    let mut queue: VecDeque<usize> = out
        .iter()
        .enumerate()
        .filter_map(|(i, n)| n.map(|_| i))
        .collect();
    if queue.is_empty() {
        return Err(Error::NoValidNormals);
    }
    while let Some(i) = queue.pop_front() {
        let n = out[i];
        let (x, y) = (i % w, i / w);
        let neighbors = [
            (x > 0).then(|| i - 1),
            (x + 1 < w).then(|| i + 1),
            (y > 0).then(|| i - w),
            (y + 1 < h).then(|| i + w),
        ];
        for j in neighbors.into_iter().flatten() {
            if out[j].is_none() {
                out[j] = n;
                queue.push_back(j);
            }
        }
    }
    Raster::from_vec(
        w,
        h,
        out.into_iter().map(|n| n.unwrap_or(Vec3::ZERO)).collect(),
    )
}
