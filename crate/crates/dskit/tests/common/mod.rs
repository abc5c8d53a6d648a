#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use dskit::io;
use dskit_core::panorama::direction_from_uv;
use dskit_core::{sample_crop_params, CropParams, DepthMap, Raster, RgbImage, SamplerConfig, Vec3};
use tempfile::TempDir;

pub const FAR: f64 = 60.0;
const GROUND_Y: f64 = -1.5;
const RING_RADIUS: f64 = 4.0;
const SPHERES: usize = 8;

pub fn sun_dir(elevation_deg: f64, azimuth_deg: f64) -> Vec3 {
    let (e, a) = (elevation_deg.to_radians(), azimuth_deg.to_radians());
    Vec3::new(e.cos() * a.sin(), e.sin(), e.cos() * a.cos())
}

/// Sky gradient, grey ground and a small, very bright sun disc.
pub fn sun_panorama(height: usize, sun: Vec3) -> RgbImage {
    let width = 2 * height;
    Raster::from_fn(width, height, |i, j| {
        let d = direction_from_uv(i as f64 / width as f64, j as f64 / (height - 1) as f64);
        if d.dot(sun) > (2.5f64).to_radians().cos() {
            [4000.0, 3800.0, 3500.0]
        } else if d.y > 0.0 {
            let s = 0.3 + 0.7 * d.y as f32;
            [0.4 * s, 0.6 * s, 1.0 * s]
        } else {
            [0.25, 0.22, 0.2]
        }
    })
}

fn ray_sphere(o: Vec3, d: Vec3, c: Vec3, r: f64) -> Option<f64> {
    let oc = o - c;
    let a = d.dot(d);
    let b = oc.dot(d);
    let disc = b * b - a * (oc.dot(oc) - r * r);
    if disc < 0.0 {
        return None;
    }
    let t = (-b - disc.sqrt()) / a;
    (t > 0.0).then_some(t)
}

/// Ground plane plus a ring of spheres around the camera, far wall at `FAR`.
/// Rays have unit camera-space z, so the hit parameter is the depth.
pub fn scene_depth(crop: &CropParams) -> DepthMap {
    let n = crop.resolution;
    let f = crop.focal_px();
    let c2w = crop.camera_to_world();
    let centers: Vec<Vec3> = (0..SPHERES)
        .map(|k| {
            let a = k as f64 * std::f64::consts::TAU / SPHERES as f64;
            Vec3::new(RING_RADIUS * a.sin(), GROUND_Y + 0.8, RING_RADIUS * a.cos())
        })
        .collect();
    DepthMap::from_fn(n, n, |x, y| {
        let rc = Vec3::new(
            (x as f64 + 0.5 - n as f64 / 2.0) / f,
            (y as f64 + 0.5 - n as f64 / 2.0) / f,
            1.0,
        );
        let d = c2w * rc;
        let mut t = FAR;
        if d.y < 0.0 {
            t = t.min(GROUND_Y / d.y);
        }
        for c in &centers {
            if let Some(h) = ray_sphere(Vec3::new(0.0, 0.0, 0.0), d, *c, 0.8) {
                t = t.min(h);
            }
        }
        t as f32
    })
    .unwrap()
}

pub struct Fixture {
    pub dir: TempDir,
    pub panos: PathBuf,
    pub depths: PathBuf,
    pub config_path: PathBuf,
    pub config: SamplerConfig,
}

impl Fixture {
    pub fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

pub const PANOS: [(&str, f64, f64); 2] = [("pano_a", 40.0, 30.0), ("pano_b", 65.0, 200.0)];

/// Two sun panoramas with one depth file per crop.
pub fn fixture(crops_per_pano: usize, resolution: usize, seed: u64) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let panos = dir.path().join("panos");
    let depths = dir.path().join("depths");
    fs::create_dir_all(&panos).unwrap();
    fs::create_dir_all(&depths).unwrap();
    let config = SamplerConfig {
        crops_per_pano,
        resolution,
        global_seed: seed,
        ..SamplerConfig::default()
    };
    let config_path = dir.path().join("config.json");
    fs::write(
        &config_path,
        format!(r#"{{"crops_per_pano": {crops_per_pano}, "resolution": {resolution}, "global_seed": {seed}}}"#),
    )
    .unwrap();
    for (id, el, az) in PANOS {
        io::write_hdr(
            &panos.join(format!("{id}.hdr")),
            &sun_panorama(64, sun_dir(el, az)),
        )
        .unwrap();
        write_depths(&depths, &config, id);
    }
    Fixture {
        dir,
        panos,
        depths,
        config_path,
        config,
    }
}

pub fn write_depths(depths: &Path, config: &SamplerConfig, id: &str) {
    for idx in 0..config.crops_per_pano as u64 {
        let crop = sample_crop_params(config, id, idx).unwrap();
        io::write_gray_pfm(
            &depths.join(format!("{id}_{idx:04}.pfm")),
            scene_depth(&crop).raster(),
        )
        .unwrap();
    }
}

/// Every file under `root`, relative path and bytes, sorted.
pub fn tree_bytes(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}
