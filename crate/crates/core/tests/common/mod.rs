#![allow(dead_code)]

use dskit_core::{CameraIntrinsics, DepthMap, Vec3};

/// Camera-frame ray through pixel `(x, y)` with unit z component.
pub fn pixel_ray(cam: &CameraIntrinsics, x: usize, y: usize) -> Vec3 {
    let u = x as f64 + 0.5 - cam.width as f64 / 2.0;
    let v = y as f64 + 0.5 - cam.height as f64 / 2.0;
    Vec3::new(u / cam.focal_px, v / cam.focal_px, 1.0)
}

/// Nearest positive ray parameter where `t·r` meets the sphere.
pub fn ray_sphere(r: Vec3, center: Vec3, radius: f64) -> Option<f64> {
    let a = r.dot(r);
    let b = -2.0 * r.dot(center);
    let c = center.dot(center) - radius * radius;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let t = (-b - disc.sqrt()) / (2.0 * a);
    (t > 0.0).then_some(t)
}

/// Sphere in front of a fronto-parallel plane at `z = background`.
pub struct SphereScene {
    pub cam: CameraIntrinsics,
    pub center: Vec3,
    pub radius: f64,
    pub background: f64,
}

impl SphereScene {
    pub fn depth(&self) -> DepthMap {
        DepthMap::from_fn(self.cam.width, self.cam.height, |x, y| {
            let r = pixel_ray(&self.cam, x, y);
            match ray_sphere(r, self.center, self.radius) {
                Some(t) if t < self.background => t as f32,
                _ => self.background as f32,
            }
        })
        .unwrap()
    }

    /// Analytic normal where the pixel sees the sphere.
    pub fn sphere_normal(&self, x: usize, y: usize) -> Option<Vec3> {
        let r = pixel_ray(&self.cam, x, y);
        let t = ray_sphere(r, self.center, self.radius)?;
        Some(((r * t) - self.center).normalized())
    }
}

/// Sphere hovering over a ground plane, seen from straight above by a
/// long-focus camera (camera +Z points down at the ground).
pub fn sphere_over_ground(n: usize) -> SphereScene {
    let half_extent: f64 = 1.6;
    let ground: f64 = 203.0;
    let vfov = 2.0 * (half_extent / 200.0).atan().to_degrees();
    SphereScene {
        cam: CameraIntrinsics::from_vertical_fov(vfov, n, n).unwrap(),
        center: Vec3::new(0.0, 0.0, 200.0),
        radius: 1.0,
        background: ground,
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}
