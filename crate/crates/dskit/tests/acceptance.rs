//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::time::{Duration, Instant};

use dskit::dataset::{self, DatasetJob, DepthDir, RenderOptions, MANIFEST_NAME};
use dskit::io;
use dskit_core::volume::{
    build_volume_from_depth, expected_depth, render_shadow_map, SUN_SOLID_ANGLE,
};
use dskit_core::{
    angular_error, compose_direct_shading, dominant_light_direction, estimate_normals, psnr,
    sample_crop_params, unproject, CameraIntrinsics, DensityVolume, DepthMap, DirectionalLight,
    DominantMethod, GrayImage, NdcMapping, NormalMap, Raster, SamplerConfig, ShadingMap, ShadowMap,
    ShadowParams, Vec3,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pixel_ray(cam: &CameraIntrinsics, x: usize, y: usize) -> Vec3 {
    let u = x as f64 + 0.5 - cam.width as f64 / 2.0;
    let v = y as f64 + 0.5 - cam.height as f64 / 2.0;
    Vec3::new(u / cam.focal_px, v / cam.focal_px, 1.0)
}

fn ray_sphere(r: Vec3, c: Vec3, radius: f64) -> Option<f64> {
    let a = r.dot(r);
    let b = -2.0 * r.dot(c);
    let disc = b * b - 4.0 * a * (c.dot(c) - radius * radius);
    (disc >= 0.0)
        .then(|| (-b - disc.sqrt()) / (2.0 * a))
        .filter(|t| *t > 0.0)
}

fn sphere_depth(cam: &CameraIntrinsics, c: Vec3, radius: f64, background: f64) -> DepthMap {
    DepthMap::from_fn(cam.width, cam.height, |x, y| {
        match ray_sphere(pixel_ray(cam, x, y), c, radius) {
            Some(t) if t < background => t as f32,
            _ => background as f32,
        }
    })
    .unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

// 1 ----------------------------------------------------------------------

fn run_full_dataset(
    fx: &common::Fixture,
    out: &std::path::Path,
    threads: usize,
) -> (dataset::DatasetSummary, Duration) {
    let provider = DepthDir::new(&fx.depths);
    let job = DatasetJob {
        pano_dir: &fx.panos,
        depth_provider: &provider,
        config: &fx.config,
        render: RenderOptions::default(),
        out_dir: out,
        limit: None,
        light_override: None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    let t = Instant::now();
    let summary = pool.install(|| dataset::generate_dataset(&job)).unwrap();
    (summary, t.elapsed())
}

fn dataset_shape(fx: &common::Fixture) -> Outcome {
    let (summary, elapsed) = run_full_dataset(fx, &fx.out("run1"), 1);
    let records =
        dataset::read_manifest(&fx.out("run1").join(MANIFEST_NAME)).map_err(|e| e.to_string())?;
    let expected = common::PANOS.len() * fx.config.crops_per_pano;
    let all_res = records
        .iter()
        .all(|r| r.resolution == 128 && r.crop.resolution == 128);
    let mut files_ok = true;
    for r in records.iter().step_by(25) {
        let img = io::read_png(&fx.out("run1").join(&r.image)).map_err(|e| e.to_string())?;
        let s =
            io::read_gray_pfm(&fx.out("run1").join(&r.shading_map)).map_err(|e| e.to_string())?;
        files_ok &= img.width == 128 && img.height == 128 && s.shape() == (128, 128);
    }
    let full_scale = 205 * SamplerConfig::default().crops_per_pano;
    check(
        records.len() == 500 && summary.written == expected && all_res && files_ok && full_scale == 51250
            && elapsed < Duration::from_secs(300),
        format!(
            "{} records (expected {expected}) at 128², 205 x {} = {full_scale}, pipeline {:.1} s on {} core(s)",
            records.len(),
            SamplerConfig::default().crops_per_pano,
            elapsed.as_secs_f64(),
            std::thread::available_parallelism().map_or(1, |n| n.get()),
        ),
    )
}

// 2 ----------------------------------------------------------------------

fn normals_oracle() -> Outcome {
    let n = 128;
    let cam = CameraIntrinsics::from_vertical_fov(60.0, n, n).unwrap();
    let mut plane_worst: f64 = 0.0;
    for (normal, offset) in [
        (Vec3::new(0.3, -0.2, -1.0), -5.0),
        (Vec3::new(-0.6, 0.1, -0.8), -3.0),
        (Vec3::new(0.0, 0.7, -0.7), -2.5),
    ] {
        // Plane n·p = offset, with n facing the camera.
        let nn = normal.normalized();
        let depth = DepthMap::from_fn(n, n, |x, y| (offset / nn.dot(pixel_ray(&cam, x, y))) as f32)
            .unwrap();
        let est = estimate_normals(&unproject(&depth, &cam).unwrap()).unwrap();
        for e in est.as_slice() {
            plane_worst = plane_worst.max(angular_error(*e, nn));
        }
    }
    let c = Vec3::new(0.2, -0.1, 4.0);
    let depth = sphere_depth(&cam, c, 1.3, 10.0);
    let est = estimate_normals(&unproject(&depth, &cam).unwrap()).unwrap();
    let mut errs = Vec::new();
    for y in 0..n {
        for x in 0..n {
            let r = pixel_ray(&cam, x, y);
            if let Some(t) = ray_sphere(r, c, 1.3) {
                errs.push(angular_error(*est.get(x, y), (r * t - c).normalized()));
            }
        }
    }
    let sphere_median = median(errs);
    check(
        plane_worst < 1.0 && sphere_median < 2.0,
        format!("slanted planes max {plane_worst:.2e}°, sphere median {sphere_median:.3}°"),
    )
}

// 3 ----------------------------------------------------------------------

/// Independent trilinear lookup on the raw plane stack.
fn brute_sigma(vol: &DensityVolume, q: Vec3) -> f64 {
    let (w, h, n) = (vol.width(), vol.height(), vol.planes());
    let axis = |p: f64, size: usize| {
        let p = (p * size as f64 - 0.5).max(0.0).min((size - 1) as f64);
        let i = p.floor() as usize;
        (i, (i + 1).min(size - 1), p - i as f64)
    };
    let (x0, x1, fx) = axis(q.x, w);
    let (y0, y1, fy) = axis(q.y, h);
    let pz = (q.z * (n - 1) as f64).max(0.0).min((n - 1) as f64);
    let z0 = (pz.floor() as usize).min(n - 2);
    let fz = pz - z0 as f64;
    let s = vol.sigma();
    let at = |k: usize, y: usize, x: usize| s[(k * h + y) * w + x] as f64;
    let plane = |k| {
        let a = at(k, y0, x0) + (at(k, y0, x1) - at(k, y0, x0)) * fx;
        let b = at(k, y1, x0) + (at(k, y1, x1) - at(k, y1, x0)) * fx;
        a + (b - a) * fy
    };
    plane(z0) * (1.0 - fz) + plane(z0 + 1) * fz
}

fn brute_transmittance(vol: &DensityVolume, o: Vec3, d: Vec3, step: f64) -> f64 {
    let d = d.normalized();
    let mut tau = 0.0;
    let mut t = 0.5 * step;
    loop {
        let q = o + d * t;
        if !(0.0..=1.0).contains(&q.x) || !(0.0..=1.0).contains(&q.y) || !(0.0..=1.0).contains(&q.z)
        {
            break;
        }
        tau += brute_sigma(vol, q) * step;
        t += step;
    }
    (-tau).exp()
}

fn quadrature() -> Outcome {
    // Uniform medium: T = exp(−σ·L) with L the chord to the cube boundary.
    let cam = CameraIntrinsics::new(16.0, 16, 16).unwrap();
    let mapping = NdcMapping::new(1.0, 4.0).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut uniform_worst: f64 = 0.0;
    for sigma in [0.5f32, 1.0, 3.0] {
        let vol = DensityVolume::new(cam, mapping, 8, vec![sigma; 16 * 16 * 8]).unwrap();
        for _ in 0..50 {
            let o = Vec3::new(rng.random(), rng.random(), rng.random());
            let d = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalized();
            let chord = (0..3)
                .map(|a| match d[a] {
                    v if v > 0.0 => (1.0 - o[a]) / v,
                    v if v < 0.0 => -o[a] / v,
                    _ => f64::INFINITY,
                })
                .fold(f64::INFINITY, f64::min);
            let want = (-(sigma as f64) * chord).exp();
            for step in [1.0 / 256.0, 1.0 / 1000.0] {
                uniform_worst = uniform_worst.max((vol.transmittance_ndc(o, d, step) - want).abs());
            }
        }
    }

    // Sphere volume against a 1/4096-step integrator.
    let n = 64;
    let cam = CameraIntrinsics::from_vertical_fov(55.0, n, n).unwrap();
    let c = Vec3::new(0.3, 0.2, 4.0);
    let depth = sphere_depth(&cam, c, 1.2, 9.0);
    let mut brute_worst: f64 = 0.0;
    let mut coarse_worst: f64 = 0.0;
    let mut partial = 0;
    for opacity in [DensityVolume::default_opacity(64), 3.0] {
        let vol = build_volume_from_depth(&depth, &cam, 64, opacity)
            .unwrap()
            .volume;
        let center = vol.to_ndc(c);
        for _ in 0..100 {
            let o = Vec3::new(rng.random(), rng.random(), rng.random_range(0.0..0.3));
            let aim = center
                + Vec3::new(
                    rng.random_range(-0.3..0.3),
                    rng.random_range(-0.3..0.3),
                    rng.random_range(-0.2..0.2),
                );
            let d = aim - o;
            let want = brute_transmittance(&vol, o, d, 1.0 / 4096.0);
            let got = vol.transmittance_ndc(o, d, 1.0 / 256.0);
            let coarse = vol.transmittance_ndc(o, d, 1.0 / 128.0);
            partial += (want > 0.01 && want < 0.99) as usize;
            brute_worst = brute_worst.max((got - want).abs());
            coarse_worst = coarse_worst.max((coarse - want).abs());
        }
    }
    check(
        uniform_worst < 1e-3 && brute_worst < 0.02,
        format!(
            "step 1/256: uniform closed form max {uniform_worst:.1e}, 2x100 sphere rays vs 1/4096 oracle max \
             {brute_worst:.1e} ({partial} partially transmitted); at step 1/128 the worst ray is {coarse_worst:.1e}"
        ),
    )
}

// 4 ----------------------------------------------------------------------

fn shadow_disc() -> Outcome {
    // Long-focus camera straight above a unit sphere hovering over the ground.
    let n = 128;
    let (ground, radius) = (203.0, 1.0);
    let c = Vec3::new(0.0, 0.0, 200.0);
    let cam = CameraIntrinsics::from_vertical_fov(2.0 * (1.6f64 / 200.0).atan().to_degrees(), n, n)
        .unwrap();
    let depth = sphere_depth(&cam, c, radius, ground);
    let vol = build_volume_from_depth(&depth, &cam, 64, DensityVolume::default_opacity(64))
        .unwrap()
        .volume;
    let surface = Raster::from_fn(n, n, |x, y| pixel_ray(&cam, x, y) * ground);
    let light = DirectionalLight::new(Vec3::new(0.0, 0.0, -1.0), SUN_SOLID_ANGLE).unwrap();
    let params = ShadowParams {
        samples: 16,
        ..ShadowParams::for_planes(64, 7)
    };
    let shadow = render_shadow_map(&vol, &surface, &light, &params).unwrap();
    let (mut inter, mut union) = (0usize, 0usize);
    for y in 0..n {
        for x in 0..n {
            let p = surface.get(x, y);
            let truth = p.x * p.x + p.y * p.y <= radius * radius;
            let dark = *shadow.raster().get(x, y) < 0.5;
            inter += (truth && dark) as usize;
            union += (truth || dark) as usize;
        }
    }
    let iou = inter as f64 / union as f64;
    check(
        iou >= 0.95,
        format!("IoU {iou:.4} at 128², 16 cone samples"),
    )
}

// 5 ----------------------------------------------------------------------

fn expected_depth_round_trip() -> Outcome {
    let cam = CameraIntrinsics::from_vertical_fov(55.0, 96, 96).unwrap();
    let depth = sphere_depth(&cam, Vec3::new(0.3, 0.2, 4.0), 1.2, 9.0);
    let vol = build_volume_from_depth(&depth, &cam, 32, DensityVolume::default_opacity(32))
        .unwrap()
        .volume;
    let e = expected_depth(&vol);
    let m = vol.mapping();
    let mut total = 0.0;
    let mut valid = 0;
    for (i, z) in depth.raster().as_slice().iter().enumerate() {
        valid += e.valid[i] as usize;
        let truth =
            ((1.0 / *z as f64 - 1.0 / m.near) / (1.0 / m.far - 1.0 / m.near)).clamp(0.0, 1.0);
        total += (e.ndc.as_slice()[i] as f64 - truth).abs();
    }
    let mae = total / depth.raster().len() as f64 / vol.plane_spacing();
    check(
        mae < 1.5 && valid == depth.raster().len(),
        format!("MAE {mae:.3} plane spacings at N = 32, {valid} valid pixels"),
    )
}

// 6 ----------------------------------------------------------------------

fn shading_composition() -> Outcome {
    let n = 1000;
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let c: GrayImage = Raster::from_fn(n, n, |_, _| rng.random::<f32>());
    let t: GrayImage = Raster::from_fn(n, n, |_, _| rng.random::<f32>());
    let s = compose_direct_shading(&c, &ShadowMap::new(t.clone()).unwrap())
        .map_err(|e| e.to_string())?;
    let products = s
        .raster()
        .as_slice()
        .iter()
        .zip(c.as_slice().iter().zip(t.as_slice()));
    let exact = products.clone().all(|(s, (c, t))| *s == c * t);
    let bounded = s
        .raster()
        .as_slice()
        .iter()
        .all(|v| (0.0..=1.0).contains(v));
    let ones = ShadowMap::new(Raster::filled(n, n, 1.0)).unwrap();
    let identity = compose_direct_shading(&c, &ones).unwrap().raster() == &c;
    let zeros = Raster::filled(n, n, 0.0f32);
    let annihilated = compose_direct_shading(&zeros, &ShadowMap::new(t).unwrap())
        .unwrap()
        .raster()
        .as_slice()
        .iter()
        .all(|v| *v == 0.0);
    check(
        exact && bounded && identity && annihilated,
        format!("10^6 pairs: s = c·T {exact}, in [0,1] {bounded}, T≡1 identity {identity}, c≡0 annihilates {annihilated}"),
    )
}

// 7 ----------------------------------------------------------------------

fn cap_normals(n: usize) -> NormalMap {
    Raster::from_fn(n, n, |x, y| {
        let u = (x as f64 + 0.5) / n as f64 * 1.4 - 0.7;
        let v = (y as f64 + 0.5) / n as f64 * 1.4 - 0.7;
        Vec3::new(u, v, -1.0).normalized()
    })
}

fn metrics() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let mut psnr_worst: f64 = 0.0;
    for _ in 0..20 {
        let a: Vec<f32> = (0..4096).map(|_| rng.random()).collect();
        let b: Vec<f32> = (0..4096).map(|_| rng.random()).collect();
        let mse = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (*x as f64 - *y as f64).powi(2))
            .sum::<f64>()
            / a.len() as f64;
        let got = psnr(&a, &b, 1.0).unwrap();
        psnr_worst = psnr_worst.max((got - 10.0 * (1.0 / mse).log10()).abs());
    }
    let x = Vec3::new(1.0, 0.0, 0.0);
    let axioms = angular_error(x, x) == 0.0
        && angular_error(x, Vec3::new(0.0, 1.0, 0.0)) == 90.0
        && angular_error(x, -x) == 180.0;

    let normals = cap_normals(64);
    let l0 = Vec3::new(0.3, -0.2, -1.0).normalized();
    let synth = |k: f32| ShadingMap::new(normals.map(|n| k * n.dot(l0) as f32)).unwrap();
    let mut recover_worst: f64 = 0.0;
    let mut scale_worst: f64 = 0.0;
    for method in [DominantMethod::Irls, DominantMethod::Linear] {
        let base =
            dominant_light_direction(&synth(1.0), &normals, method).map_err(|e| e.to_string())?;
        recover_worst = recover_worst.max(angular_error(base, l0));
        for k in [0.3, 0.55, 0.9] {
            let d =
                dominant_light_direction(&synth(k), &normals, method).map_err(|e| e.to_string())?;
            scale_worst = scale_worst.max(angular_error(base, d));
        }
    }
    check(
        psnr_worst < 1e-9 && axioms && recover_worst < 1.0 && scale_worst < 1e-6,
        format!(
            "PSNR vs MSE oracle {psnr_worst:.1e} dB, 0/90/180 axioms {axioms}, light recovered within \
             {recover_worst:.2e}°, scaling changes direction by {scale_worst:.1e}°"
        ),
    )
}

// 8 ----------------------------------------------------------------------

fn determinism(fx: &common::Fixture) -> Outcome {
    let (_, elapsed) = run_full_dataset(fx, &fx.out("run8"), 8);
    let a = common::tree_bytes(&fx.out("run1"));
    let b = common::tree_bytes(&fx.out("run8"));
    let bytes: usize = a.iter().map(|(_, v)| v.len()).sum();
    check(
        a == b && a.len() == 1 + 4 * 500,
        format!(
            "1 vs 8 workers: {} files, {bytes} bytes identical: {} ({:.1} s)",
            a.len(),
            a == b,
            elapsed.as_secs_f64()
        ),
    )
}

// 9 ----------------------------------------------------------------------

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(*x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn uniform_cdf(a: f64, b: f64) -> impl Fn(f64) -> f64 {
    move |x| ((x - a) / (b - a)).clamp(0.0, 1.0)
}

fn triangular_cdf(a: f64, b: f64, m: f64) -> impl Fn(f64) -> f64 {
    move |x| {
        if x <= a {
            0.0
        } else if x <= m {
            (x - a).powi(2) / ((b - a) * (m - a))
        } else if x < b {
            1.0 - (b - x).powi(2) / ((b - a) * (b - m))
        } else {
            1.0
        }
    }
}

fn crop_distribution() -> Outcome {
    let cfg = SamplerConfig::default();
    let n = 100_000;
    let draws: Vec<_> = (0..n as u64)
        .map(|i| sample_crop_params(&cfg, "ks", i).unwrap())
        .collect();
    let col = |f: fn(&dskit_core::CropParams) -> f64| draws.iter().map(f).collect::<Vec<f64>>();
    let (fov, az, el, roll) = (
        col(|c| c.vertical_fov),
        col(|c| c.azimuth),
        col(|c| c.elevation),
        col(|c| c.roll),
    );
    let bounds = fov.iter().all(|v| (30.0..=110.0).contains(v))
        && az.iter().all(|v| (0.0..360.0).contains(v))
        && el.iter().all(|v| (-22.5..=22.5).contains(v))
        && roll.iter().all(|v| (-22.5..=22.5).contains(v));
    let critical = (-(0.01f64 / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt();
    let stats = [
        ks_statistic(fov, uniform_cdf(30.0, 110.0)),
        ks_statistic(az, uniform_cdf(0.0, 360.0)),
        ks_statistic(el, triangular_cdf(-22.5, 22.5, 0.0)),
        ks_statistic(roll, triangular_cdf(-22.5, 22.5, 0.0)),
    ];
    check(
        bounds && stats.iter().all(|d| *d < critical),
        format!(
            "bounds {bounds}; KS D fov {:.4} az {:.4} el {:.4} roll {:.4} vs critical {critical:.4} (alpha 0.01)",
            stats[0], stats[1], stats[2], stats[3]
        ),
    )
}

fn main() {
    let t = Instant::now();
    let fx = common::fixture(250, 128, 2024);
    let fixture_time = t.elapsed();
    let criteria: Vec<Criterion<'_>> = vec![
        ("1 dataset shape", Box::new(|| dataset_shape(&fx))),
        ("2 normals oracle", Box::new(normals_oracle)),
        ("3 ray-march quadrature", Box::new(quadrature)),
        ("4 cast-shadow disc", Box::new(shadow_disc)),
        (
            "5 expected-depth round trip",
            Box::new(expected_depth_round_trip),
        ),
        (
            "6 shading bounds and composition",
            Box::new(shading_composition),
        ),
        ("7 metrics", Box::new(metrics)),
        ("8 determinism", Box::new(|| determinism(&fx))),
        ("9 crop distributions", Box::new(crop_distribution)),
    ];
    println!(
        "acceptance: fixture of 2 panoramas x 250 depth maps built in {:.1} s",
        fixture_time.as_secs_f64()
    );
    let mut failed = 0;
    for (name, run) in &criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".to_owned()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("[PASS] {name}: {d} [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("[FAIL] {name}: {d} [{secs:.1} s]");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
