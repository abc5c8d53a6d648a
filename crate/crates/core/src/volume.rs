//! Multi-plane density volume in normalized device coordinates, ray-marched
//! transmittance, cast-shadow maps and expected depth.
//!
//! NDC here is `(x, y, d)` with `x = u/W`, `y = v/H` (continuous pixel
//! coordinates over the image size) and `d` linear in disparity between the
//! near and far depths. Straight camera-space rays stay straight in NDC, so
//! marching happens directly in the plane stack with a fixed NDC step.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::geometry::{CameraIntrinsics, DepthMap, PointCloud};
use crate::math::{self, Vec3};
use crate::raster::{GrayImage, Raster};

/// Marching stops once the accumulated optical depth exceeds this.
pub const MAX_OPTICAL_DEPTH: f64 = 20.0;

/// Pixels with less total absorption weight are invalid in [`expected_depth`].
pub const MIN_EXPECTED_WEIGHT: f64 = 1e-6;

/// Angular size of the sun, in steradians.
pub const SUN_SOLID_ANGLE: f64 = 6.8e-5;

pub const DEFAULT_PLANES: usize = 64;
pub const DEFAULT_SHADOW_SAMPLES: usize = 16;

/// Disparity-linear mapping between metric depth and NDC depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdcMapping {
    pub near: f64,
    pub far: f64,
}

impl NdcMapping {
    pub fn new(near: f64, far: f64) -> Result<Self> {
        if !(near > 0.0 && far > near && far.is_finite()) {
            return Err(invalid("near/far", "need 0 < near < far < ∞"));
        }
        Ok(Self { near, far })
    }

    /// Near/far from the 0.5% and 99.5% depth percentiles, padded by 5%.
    pub fn from_depth(depth: &DepthMap) -> Self {
        let mut z: Vec<f32> = depth.raster().as_slice().to_vec();
        z.sort_unstable_by(f32::total_cmp);
        let pick = |p: f64| z[math::floor(p * (z.len() - 1) as f64 + 0.5) as usize] as f64;
        let near = pick(0.005) / 1.05;
        let far = pick(0.995) * 1.05;
        Self { near, far }
    }

    #[inline]
    pub fn to_ndc(&self, z: f64) -> f64 {
        (1.0 / z - 1.0 / self.near) / (1.0 / self.far - 1.0 / self.near)
    }

    #[inline]
    pub fn to_metric(&self, d: f64) -> f64 {
        1.0 / (1.0 / self.near + d * (1.0 / self.far - 1.0 / self.near))
    }
}

/// Stack of fronto-parallel extinction grids at NDC depths `k / (N − 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVolume {
    camera: CameraIntrinsics,
    mapping: NdcMapping,
    planes: usize,
    /// Plane-major, then row-major.
    sigma: Vec<f32>,
}

impl DensityVolume {
    pub fn new(
        camera: CameraIntrinsics,
        mapping: NdcMapping,
        planes: usize,
        sigma: Vec<f32>,
    ) -> Result<Self> {
        if planes < 2 {
            return Err(invalid("n_planes", "need at least 2 planes"));
        }
        if sigma.len() != planes * camera.width * camera.height {
            return Err(invalid("sigma", "length must be planes × width × height"));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(invalid("sigma", "extinction must be finite and ≥ 0"));
        }
        Ok(Self {
            camera,
            mapping,
            planes,
            sigma,
        })
    }

    pub fn empty(camera: CameraIntrinsics, mapping: NdcMapping, planes: usize) -> Result<Self> {
        Self::new(
            camera,
            mapping,
            planes,
            vec![0.0; planes * camera.width * camera.height],
        )
    }

    /// Opacity that makes one plane crossing effectively opaque: `50 / spacing`.
    pub fn default_opacity(planes: usize) -> f64 {
        50.0 * (planes - 1) as f64
    }

    pub fn camera(&self) -> &CameraIntrinsics {
        &self.camera
    }

    pub fn mapping(&self) -> &NdcMapping {
        &self.mapping
    }

    pub fn planes(&self) -> usize {
        self.planes
    }

    pub fn width(&self) -> usize {
        self.camera.width
    }

    pub fn height(&self) -> usize {
        self.camera.height
    }

    pub fn sigma(&self) -> &[f32] {
        &self.sigma
    }

    pub fn plane(&self, k: usize) -> &[f32] {
        let n = self.width() * self.height();
        &self.sigma[k * n..(k + 1) * n]
    }

    pub fn plane_mut(&mut self, k: usize) -> &mut [f32] {
        let n = self.width() * self.height();
        &mut self.sigma[k * n..(k + 1) * n]
    }

    #[inline]
    pub fn plane_depth(&self, k: usize) -> f64 {
        k as f64 / (self.planes - 1) as f64
    }

    #[inline]
    pub fn plane_spacing(&self) -> f64 {
        1.0 / (self.planes - 1) as f64
    }

    /// NDC coordinates of a camera-frame point.
    #[inline]
    pub fn to_ndc(&self, p: Vec3) -> Vec3 {
        let (u, v) = self.camera.project(p);
        Vec3::new(
            u / self.camera.width as f64,
            v / self.camera.height as f64,
            self.mapping.to_ndc(p.z),
        )
    }

    /// Camera-frame point for NDC coordinates.
    pub fn from_ndc(&self, q: Vec3) -> Vec3 {
        let z = self.mapping.to_metric(q.z);
        let u = q.x * self.camera.width as f64 - self.camera.width as f64 / 2.0;
        let v = q.y * self.camera.height as f64 - self.camera.height as f64 / 2.0;
        Vec3::new(
            u * z / self.camera.focal_px,
            v * z / self.camera.focal_px,
            z,
        )
    }

    /// Tangent in NDC of the camera-space ray `p + t·dir` at `t = 0`
    /// (not normalized).
    #[inline]
    pub fn ndc_direction(&self, p: Vec3, dir: Vec3) -> Vec3 {
        let f = self.camera.focal_px;
        let inv_z2 = 1.0 / (p.z * p.z);
        let denom = 1.0 / self.mapping.far - 1.0 / self.mapping.near;
        Vec3::new(
            f * (dir.x * p.z - p.x * dir.z) * inv_z2 / self.camera.width as f64,
            f * (dir.y * p.z - p.y * dir.z) * inv_z2 / self.camera.height as f64,
            -dir.z * inv_z2 / denom,
        )
    }

    #[inline]
    pub fn contains(&self, q: Vec3) -> bool {
        (0.0..=1.0).contains(&q.x) && (0.0..=1.0).contains(&q.y) && (0.0..=1.0).contains(&q.z)
    }

    /// Extinction at an NDC point: bilinear within planes (pixel centers at
    /// `(i + ½)/W`, clamped at the border), linear between planes.
    #[inline]
    pub fn sigma_at(&self, q: Vec3) -> f64 {
        let w = self.camera.width;
        let h = self.camera.height;
        let (x0, x1, fx) = lerp_index(q.x * w as f64 - 0.5, w);
        let (y0, y1, fy) = lerp_index(q.y * h as f64 - 0.5, h);
        let pz = (q.z * (self.planes - 1) as f64).clamp(0.0, (self.planes - 1) as f64);
        let z0 = (pz as usize).min(self.planes - 2);
        let fz = pz - z0 as f64;
        let n = w * h;
        let plane = |k: usize| {
            let base = k * n;
            let s = &self.sigma;
            let top = s[base + y0 * w + x0] as f64 * (1.0 - fx) + s[base + y0 * w + x1] as f64 * fx;
            let bot = s[base + y1 * w + x0] as f64 * (1.0 - fx) + s[base + y1 * w + x1] as f64 * fx;
            top * (1.0 - fy) + bot * fy
        };
        let a = plane(z0);
        let b = plane(z0 + 1);
        a * (1.0 - fz) + b * fz
    }

    /// Transmittance along an NDC ray from `origin` in direction `dir` (any
    /// non-zero length) until it leaves the unit cube.
    ///
    /// Midpoint quadrature with fixed step; the last step is shortened to end
    /// exactly on the boundary.
    pub fn transmittance_ndc(&self, origin: Vec3, dir: Vec3, step: f64) -> f64 {
        self.march(None, origin, dir, step)
    }

    fn march(&self, occupancy: Option<&Occupancy>, origin: Vec3, dir: Vec3, step: f64) -> f64 {
        if !self.contains(origin) {
            return 1.0;
        }
        let Some(dir) = dir.try_normalize() else {
            return 1.0;
        };
        let t_exit = exit_distance(origin, dir);
        let mut tau = 0.0;
        let mut j = 0usize;
        loop {
            let t0 = j as f64 * step;
            if t0 >= t_exit {
                break;
            }
            let dt = step.min(t_exit - t0);
            let t_mid = t0 + 0.5 * dt;
            let q = origin + dir * t_mid;
            if let Some(occ) = occupancy {
                if let Some(t_free) = occ.free_distance(self, q, dir) {
                    // Every sample strictly inside the empty cell adds exactly
                    // zero; keep one step of margin before the cell boundary.
                    let skip_to = math::floor((t_mid + t_free) / step - 0.5) as usize;
                    j = skip_to.max(j + 1);
                    continue;
                }
            }
            tau += self.sigma_at(q) * dt;
            if tau > MAX_OPTICAL_DEPTH {
                break;
            }
            j += 1;
        }
        math::exp(-tau)
    }

    /// Offset applied toward the camera before marching shadow rays.
    pub fn shadow_bias(&self, step: f64) -> f64 {
        (2.0 * step).max(2.0 * self.plane_spacing())
    }

    /// Origin used for shadow rays leaving surface point `p`: moved toward
    /// the camera along its view ray by [`DensityVolume::shadow_bias`] in NDC
    /// depth.
    pub fn shadow_ray_origin(&self, p: Vec3, step: f64) -> Vec3 {
        let d = self.mapping.to_ndc(p.z) - self.shadow_bias(step);
        let z = self.mapping.to_metric(d);
        p * (z / p.z)
    }
}

/// Coarse maps of where [`DensityVolume::sigma_at`] is exactly zero, coarsest
/// level first.
struct Occupancy {
    levels: Vec<OccupancyLevel>,
}

/// Cell `(cx, cy, cz)` covers lookups whose lower interpolation corner falls in
/// pixels `[cx·B, cx·B + B)` × `[cy·B, cy·B + B)` and plane interval `cz`.
/// Empty cells store the run of consecutive empty intervals around them.
struct OccupancyLevel {
    cell: usize,
    cells_x: usize,
    cells_y: usize,
    /// `(first, last)` empty interval of the run, or `None` if occupied.
    runs: Vec<Option<(u32, u32)>>,
}

const CELL_SIZES: [usize; 2] = [32, 8];

impl Occupancy {
    fn new(vol: &DensityVolume) -> Self {
        Self {
            levels: CELL_SIZES
                .iter()
                .map(|c| OccupancyLevel::new(vol, *c))
                .collect(),
        }
    }

    /// Distance along unit `dir` from `q` to the boundary of the largest
    /// empty region around it, or `None` if `q` may see density.
    #[inline]
    fn free_distance(&self, vol: &DensityVolume, q: Vec3, dir: Vec3) -> Option<f64> {
        self.levels
            .iter()
            .find_map(|l| l.free_distance(vol, q, dir))
    }
}

impl OccupancyLevel {
    fn new(vol: &DensityVolume, cell: usize) -> Self {
        let (w, h) = (vol.width(), vol.height());
        let cells_x = w.div_ceil(cell);
        let cells_y = h.div_ceil(cell);
        let intervals = vol.planes - 1;
        let mut empty = vec![false; cells_x * cells_y * intervals];
        for cz in 0..intervals {
            let (a, b) = (vol.plane(cz), vol.plane(cz + 1));
            for cy in 0..cells_y {
                let ys = cy * cell..((cy + 1) * cell + 1).min(h);
                for cx in 0..cells_x {
                    let xs = cx * cell..((cx + 1) * cell + 1).min(w);
                    let any = ys.clone().any(|y| {
                        let row = y * w;
                        xs.clone().any(|x| a[row + x] != 0.0 || b[row + x] != 0.0)
                    });
                    empty[(cz * cells_y + cy) * cells_x + cx] = !any;
                }
            }
        }
        let mut runs = vec![None; empty.len()];
        let stride = cells_x * cells_y;
        for c in 0..stride {
            let mut cz = 0;
            while cz < intervals {
                if !empty[cz * stride + c] {
                    cz += 1;
                    continue;
                }
                let first = cz;
                while cz + 1 < intervals && empty[(cz + 1) * stride + c] {
                    cz += 1;
                }
                for k in first..=cz {
                    runs[k * stride + c] = Some((first as u32, cz as u32));
                }
                cz += 1;
            }
        }
        Self {
            cell,
            cells_x,
            cells_y,
            runs,
        }
    }

    #[inline]
    fn free_distance(&self, vol: &DensityVolume, q: Vec3, dir: Vec3) -> Option<f64> {
        let (w, h) = (vol.width() as f64, vol.height() as f64);
        let last_plane = (vol.planes - 1) as f64;
        let px = (q.x * w - 0.5).clamp(0.0, w - 1.0);
        let py = (q.y * h - 0.5).clamp(0.0, h - 1.0);
        let pz = (q.z * last_plane).clamp(0.0, last_plane);
        let cx = (px as usize / self.cell).min(self.cells_x - 1);
        let cy = (py as usize / self.cell).min(self.cells_y - 1);
        let cz = (pz as usize).min(vol.planes - 2);
        let (first, last) = self.runs[(cz * self.cells_y + cy) * self.cells_x + cx]?;
        // Region bounds in NDC; outer edges extend to infinity because
        // lookups clamp there.
        let bound = |lo_c: usize, hi_c: usize, cells: usize, size: f64, n: f64, off: f64| {
            let lo = if lo_c == 0 {
                f64::NEG_INFINITY
            } else {
                (lo_c as f64 * size + off) / n
            };
            let hi = if hi_c + 1 == cells {
                f64::INFINITY
            } else {
                ((hi_c + 1) as f64 * size + off) / n
            };
            (lo, hi)
        };
        let size = self.cell as f64;
        let bx = bound(cx, cx, self.cells_x, size, w, 0.5);
        let by = bound(cy, cy, self.cells_y, size, h, 0.5);
        let bz = bound(
            first as usize,
            last as usize,
            vol.planes - 1,
            1.0,
            last_plane,
            0.0,
        );
        let mut t = f64::INFINITY;
        for (p, d, (lo, hi)) in [(q.x, dir.x, bx), (q.y, dir.y, by), (q.z, dir.z, bz)] {
            if d > 0.0 {
                t = t.min((hi - p) / d);
            } else if d < 0.0 {
                t = t.min((lo - p) / d);
            }
        }
        Some(t.max(0.0))
    }
}

#[inline]
fn lerp_index(p: f64, n: usize) -> (usize, usize, f64) {
    let p = p.clamp(0.0, (n - 1) as f64);
    let i0 = p as usize;
    let i1 = (i0 + 1).min(n - 1);
    (i0, i1, p - i0 as f64)
}

/// Distance along unit `dir` from `o` (inside the unit cube) to its boundary.
fn exit_distance(o: Vec3, dir: Vec3) -> f64 {
    let mut t = f64::INFINITY;
    for a in 0..3 {
        let (p, d) = (o[a], dir[a]);
        if d > 0.0 {
            t = t.min((1.0 - p) / d);
        } else if d < 0.0 {
            t = t.min(-p / d);
        }
    }
    t.max(0.0)
}

/// Transmittance along a camera-frame ray `origin + t·dir` through the
/// volume. Origins outside the frustum see no medium.
pub fn raymarch_transmittance(
    vol: &DensityVolume,
    origin: Vec3,
    dir: Vec3,
    step: f64,
) -> Result<f64> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid("step", "must be positive"));
    }
    Ok(transmittance_unchecked(vol, origin, dir, step))
}

#[inline]
fn transmittance_unchecked(vol: &DensityVolume, origin: Vec3, dir: Vec3, step: f64) -> f64 {
    transmittance_with(vol, None, origin, dir, step)
}

#[inline]
fn transmittance_with(
    vol: &DensityVolume,
    occ: Option<&Occupancy>,
    origin: Vec3,
    dir: Vec3,
    step: f64,
) -> f64 {
    if !(origin.z > 0.0) || !origin.is_finite() {
        return 1.0;
    }
    let q = vol.to_ndc(origin);
    if !vol.contains(q) {
        return 1.0;
    }
    vol.march(occ, q, vol.ndc_direction(origin, dir), step)
}

/// Output of [`build_volume_from_depth`].
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeBuild {
    pub volume: DensityVolume,
    /// Pixels whose depth fell outside `[near, far]` and was clamped.
    pub clamped: usize,
}

/// Deterministic density from a depth map.
///
/// A pixel at NDC depth `d ∈ [d_k, d_{k+1}]` splits `opacity` linearly between
/// planes `k` and `k + 1`; every plane strictly behind `d` additionally
/// receives `opacity`, so surfaces are solid and occlude.
pub fn build_volume_from_depth(
    depth: &DepthMap,
    cam: &CameraIntrinsics,
    n_planes: usize,
    opacity: f64,
) -> Result<VolumeBuild> {
    build_volume_with_mapping(depth, cam, NdcMapping::from_depth(depth), n_planes, opacity)
}

/// [`build_volume_from_depth`] with an explicit near/far mapping.
pub fn build_volume_with_mapping(
    depth: &DepthMap,
    cam: &CameraIntrinsics,
    mapping: NdcMapping,
    n_planes: usize,
    opacity: f64,
) -> Result<VolumeBuild> {
    if !(opacity > 0.0 && opacity.is_finite()) {
        return Err(invalid("opacity", "must be positive"));
    }
    depth.raster().ensure_shape(cam.shape())?;
    let mut volume = DensityVolume::empty(*cam, mapping, n_planes)?;
    let n = cam.width * cam.height;
    let last = (n_planes - 1) as f64;
    let sigma0 = opacity as f32;
    let mut clamped = 0;
    for (pix, &z) in depth.raster().as_slice().iter().enumerate() {
        let mut d = mapping.to_ndc(z as f64);
        if !(0.0..=1.0).contains(&d) {
            clamped += 1;
            d = d.clamp(0.0, 1.0);
        }
        let (k, alpha) = splat(d, n_planes);
        volume.sigma[k * n + pix] += (opacity * (1.0 - alpha)) as f32;
        volume.sigma[(k + 1) * n + pix] += (opacity * alpha) as f32;
        for m in k + 1..n_planes {
            if m as f64 / last > d {
                volume.sigma[m * n + pix] += sigma0;
            }
        }
    }
    Ok(VolumeBuild { volume, clamped })
}

/// Lower plane index and interpolation weight toward the next plane for an
/// NDC depth in `[0, 1]`.
pub fn splat(d: f64, planes: usize) -> (usize, f64) {
    let pz = d * (planes - 1) as f64;
    let k = (pz as usize).min(planes - 2);
    (k, pz - k as f64)
}

/// Directional light with angular extent. `direction` points toward the light.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionalLight {
    pub direction: Vec3,
    pub solid_angle: f64,
}

impl DirectionalLight {
    pub fn new(direction: Vec3, solid_angle: f64) -> Result<Self> {
        if (direction.norm() - 1.0).abs() > 1e-6 {
            return Err(invalid("direction", "must be unit length"));
        }
        if !(solid_angle > 0.0 && solid_angle <= 4.0 * PI) {
            return Err(invalid("solid_angle", "must lie in (0, 4π] sr"));
        }
        Ok(Self {
            direction,
            solid_angle,
        })
    }

    /// Normalizes `direction` first.
    pub fn toward(direction: Vec3, solid_angle: f64) -> Result<Self> {
        let d = direction
            .try_normalize()
            .ok_or_else(|| invalid("direction", "must be non-zero"))?;
        Self::new(d, solid_angle)
    }

    /// Cone sample `k` of `count`: Hammersley points (`k / count`, base-2
    /// radical inverse rotated by `rotation`) mapped uniformly over the cone's
    /// solid angle. Sample 0 is always the cone axis.
    pub fn cone_sample(&self, k: usize, count: usize, rotation: f64) -> Vec3 {
        let cos_max = (1.0 - self.solid_angle / (2.0 * PI)).clamp(-1.0, 1.0);
        let u1 = k as f64 / count as f64;
        let mut u2 = radical_inverse_base2(k as u32) + rotation;
        if u2 >= 1.0 {
            u2 -= 1.0;
        }
        let cos_t = 1.0 - u1 * (1.0 - cos_max);
        let sin_t = math::sqrt((1.0 - cos_t * cos_t).max(0.0));
        let phi = 2.0 * PI * u2;
        let (t, b) = self.direction.orthonormal_basis();
        self.direction * cos_t + t * (sin_t * math::cos(phi)) + b * (sin_t * math::sin(phi))
    }
}

#[inline]
fn radical_inverse_base2(k: u32) -> f64 {
    k.reverse_bits() as f64 * (1.0 / 4_294_967_296.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowParams {
    pub samples: usize,
    pub step: f64,
    pub seed: u64,
}

impl ShadowParams {
    /// Defaults for a given plane count: 16 samples, step `1/(2N)`.
    pub fn for_planes(planes: usize, seed: u64) -> Self {
        Self {
            samples: DEFAULT_SHADOW_SAMPLES,
            step: 1.0 / (2.0 * planes as f64),
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(invalid("samples", "must be at least 1"));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(invalid("step", "must be positive"));
        }
        Ok(())
    }
}

/// Per-pixel transmittance toward a light, in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowMap(GrayImage);

impl ShadowMap {
    pub fn new(t: GrayImage) -> Result<Self> {
        if t.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid("shadow map", "transmittance must lie in [0, 1]"));
        }
        Ok(Self(t))
    }

    pub fn raster(&self) -> &GrayImage {
        &self.0
    }

    pub fn into_raster(self) -> GrayImage {
        self.0
    }
}

/// Soft cast shadows: per pixel, the mean transmittance over `samples` cone
/// directions around the light, marched from the (biased) surface point.
///
/// Cone rotations are seeded per pixel from `seed ⊕ pixel index`, so the
/// result does not depend on evaluation order or thread count.
pub fn render_shadow_map(
    vol: &DensityVolume,
    surface: &PointCloud,
    light: &DirectionalLight,
    params: &ShadowParams,
) -> Result<ShadowMap> {
    render_shadow_map_masked(vol, surface, light, params, None)
}

/// [`render_shadow_map`] restricted to pixels where `mask` is true; others are
/// reported fully lit.
pub fn render_shadow_map_masked(
    vol: &DensityVolume,
    surface: &PointCloud,
    light: &DirectionalLight,
    params: &ShadowParams,
    mask: Option<&[bool]>,
) -> Result<ShadowMap> {
    params.validate()?;
    let (w, h) = surface.shape();
    if let Some(m) = mask {
        if m.len() != w * h {
            return Err(Error::ShapeMismatch {
                expected: (w, h),
                found: (m.len(), 1),
            });
        }
    }
    let occupancy = Occupancy::new(vol);
    let t = Raster::from_fn_rows(w, h, |x, y| {
        let idx = y * w + x;
        if mask.is_some_and(|m| !m[idx]) {
            return 1.0f32;
        }
        let p = *surface.get(x, y);
        if !(p.z > 0.0) {
            return 1.0;
        }
        let origin = vol.shadow_ray_origin(p, params.step);
        let rotation = math::unit_f64(math::mix64(params.seed ^ idx as u64));
        let sum: f64 = (0..params.samples)
            .map(|k| {
                let dir = light.cone_sample(k, params.samples, rotation);
                transmittance_with(vol, Some(&occupancy), origin, dir, params.step)
            })
            .sum();
        ((sum / params.samples as f64) as f32).clamp(0.0, 1.0)
    });
    Ok(ShadowMap(t))
}

/// Expected NDC depth per camera ray.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedDepth {
    pub ndc: GrayImage,
    pub valid: Vec<bool>,
    pub mapping: NdcMapping,
}

impl ExpectedDepth {
    /// Metric depth for valid pixels, `None` elsewhere.
    pub fn metric(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.ndc.width() + x;
        self.valid[i].then(|| self.mapping.to_metric(*self.ndc.get(x, y) as f64))
    }
}

/// Absorption-weighted mean plane depth along each pixel's camera ray (a
/// column of the plane stack): `w_j = T_{j−1}·(1 − exp(−σ_j·Δ))`.
pub fn expected_depth(vol: &DensityVolume) -> ExpectedDepth {
    let (w, h) = (vol.width(), vol.height());
    let n = w * h;
    let spacing = vol.plane_spacing();
    let mut valid = vec![false; n];
    let mut ndc = Raster::filled(w, h, 0.0f32);
    #[allow(clippy::needless_range_loop)]
    for pix in 0..n {
        let mut trans = 1.0;
        let mut wsum = 0.0;
        let mut dsum = 0.0;
        for k in 0..vol.planes {
            let a = 1.0 - math::exp(-(vol.sigma[k * n + pix] as f64) * spacing);
            let wk = trans * a;
            wsum += wk;
            dsum += wk * vol.plane_depth(k);
            trans *= 1.0 - a;
        }
        if wsum >= MIN_EXPECTED_WEIGHT {
            valid[pix] = true;
            ndc.as_mut_slice()[pix] = (dsum / wsum) as f32;
        }
    }
    ExpectedDepth {
        ndc,
        valid,
        mapping: vol.mapping,
    }
}
