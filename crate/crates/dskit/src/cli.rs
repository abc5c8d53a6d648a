//! `dskit` command line. Each subcommand wraps one library operation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use dskit_core::volume::{
    build_volume_from_depth, expected_depth, render_shadow_map, DEFAULT_PLANES,
    DEFAULT_SHADOW_SAMPLES, SUN_SOLID_ANGLE,
};
use dskit_core::{
    compose_direct_shading, crop_perspective, detect_sun_direction, estimate_normals, ndotl,
    normalize_mean_intensity, sample_crop_params, tonemap_ldr, unproject, CameraIntrinsics,
    CropParams, DensityVolume, DepthMap, DirectionalLight, DominantMethod, SamplerConfig,
    ShadowParams, Vec3,
};

use crate::dataset::{self, DatasetJob, DepthDir, RenderOptions};
use crate::{eval, io, volume_file, Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "dskit",
    version,
    about = "Direct shading with volumetric cast shadows, and paired dataset generation"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOptions,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOptions {
    /// Global seed; overrides the config's `global_seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads, 0 = one per core.
    #[arg(long, global = true, env = "DSKIT_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,
    /// Sampler config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the brightest-pixel light direction of a panorama as JSON.
    Sun { panorama: PathBuf },
    /// Render a perspective crop of a panorama.
    Crop(CropArgs),
    /// Estimate normals from a depth map.
    Normals(NormalsArgs),
    /// Render a cast-shadow (transmittance) map from a depth map.
    Shadow(ShadowArgs),
    /// Compose direct shading s = max(0, n·l)·T.
    Shade(ShadeArgs),
    /// Generate paired image / normal / shading samples.
    Dataset(DatasetArgs),
    /// Shading PSNR and light angular error over pairs of shading maps.
    Eval(EvalArgs),
    /// Build a density volume from a depth map and write it as DSKV1.
    VolumeDump(VolumeDumpArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct CameraArgs {
    /// Vertical field of view in degrees.
    #[arg(long)]
    pub vfov: Option<f64>,
    /// Focal length in pixels.
    #[arg(long)]
    pub focal: Option<f64>,
}

impl CameraArgs {
    fn intrinsics(&self, width: usize, height: usize) -> Result<CameraIntrinsics> {
        Ok(match (self.vfov, self.focal) {
            (Some(v), _) => CameraIntrinsics::from_vertical_fov(v, width, height)?,
            (None, Some(f)) => CameraIntrinsics::new(f, width, height)?,
            (None, None) => {
                return Err(Error::Usage("one of --vfov or --focal is required".into()))
            }
        })
    }
}

#[derive(Debug, Args)]
pub struct CropArgs {
    pub panorama: PathBuf,
    /// Output: `.png` is normalized and tonemapped, `.pfm`/`.hdr` stay linear.
    #[arg(long)]
    pub out: PathBuf,
    /// Use the sampled parameters of this crop index (needs the panorama id from the file name).
    #[arg(long, conflicts_with_all = ["vfov", "azimuth", "elevation", "roll"])]
    pub index: Option<u64>,
    #[arg(long, default_value_t = 60.0)]
    pub vfov: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub azimuth: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub elevation: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub roll: f64,
    #[arg(long)]
    pub resolution: Option<usize>,
}

#[derive(Debug, Args)]
pub struct NormalsArgs {
    /// Metric depth, single-channel PFM.
    #[arg(long)]
    pub depth: PathBuf,
    #[command(flatten)]
    pub camera: CameraArgs,
    /// Normal map, 3-channel PFM.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional visualization PNG.
    #[arg(long)]
    pub png: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VolumeArgs {
    #[arg(long, default_value_t = DEFAULT_PLANES)]
    pub planes: usize,
    /// Per-plane opacity, default 50·(N−1).
    #[arg(long)]
    pub opacity: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ShadowArgs {
    #[arg(long)]
    pub depth: PathBuf,
    #[command(flatten)]
    pub camera: CameraArgs,
    /// Camera-frame direction toward the light, `x,y,z`.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub light: Vec3,
    #[arg(long, default_value_t = SUN_SOLID_ANGLE)]
    pub solid_angle: f64,
    #[arg(long, default_value_t = DEFAULT_SHADOW_SAMPLES)]
    pub samples: usize,
    #[command(flatten)]
    pub volume: VolumeArgs,
    /// Transmittance map, single-channel PFM.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ShadeArgs {
    #[arg(long)]
    pub normals: PathBuf,
    /// Transmittance map; omit for no cast shadows.
    #[arg(long)]
    pub shadow: Option<PathBuf>,
    /// Camera-frame direction toward the light, `x,y,z`.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub light: Vec3,
    #[arg(long)]
    pub out: PathBuf,
    /// Optional γ-encoded PNG.
    #[arg(long)]
    pub png: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long)]
    pub panos: PathBuf,
    #[arg(long)]
    pub depths: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Stop after the first K samples in (panorama, crop) order.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Camera-frame light for every crop instead of the detected sun.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub light: Option<Vec3>,
    #[arg(long, default_value_t = SUN_SOLID_ANGLE)]
    pub solid_angle: f64,
    #[arg(long, default_value_t = DEFAULT_SHADOW_SAMPLES)]
    pub samples: usize,
    #[command(flatten)]
    pub volume: VolumeArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Irls,
    Linear,
}

impl From<MethodArg> for DominantMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Irls => DominantMethod::Irls,
            MethodArg::Linear => DominantMethod::Linear,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSON lines of `{"reference", "candidate", "normals"[, "id"]}`.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Dominant light direction extractor.
    #[arg(long, value_enum, default_value_t = MethodArg::Irls)]
    pub method: MethodArg,
}

#[derive(Debug, Args)]
pub struct VolumeDumpArgs {
    #[arg(long)]
    pub depth: PathBuf,
    #[command(flatten)]
    pub camera: CameraArgs,
    #[command(flatten)]
    pub volume: VolumeArgs,
    /// DSKV1 output.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write each plane as a PFM into this directory.
    #[arg(long)]
    pub slices: Option<PathBuf>,
    /// Also write the expected metric depth (0 where no surface was hit).
    #[arg(long)]
    pub expected_depth: Option<PathBuf>,
}

fn parse_vec3(s: &str) -> std::result::Result<Vec3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [x, y, z] if x.is_finite() && y.is_finite() && z.is_finite() => Ok(Vec3::new(x, y, z)),
        _ => Err("expected three finite numbers x,y,z".into()),
    }
}

fn load_depth(path: &Path) -> Result<DepthMap> {
    DepthMap::new(io::read_gray_pfm(path)?).map_err(|e| Error::format(path, e.to_string()))
}

fn sampler_config(global: &GlobalOptions) -> Result<SamplerConfig> {
    let mut cfg = match &global.config {
        Some(p) => dataset::load_config(p)?,
        None => SamplerConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.global_seed = seed;
    }
    Ok(cfg)
}

fn print_json(value: &serde_json::Value) {
    println!("{value}");
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
        }
        _ => Ok(()),
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Sun { panorama } => {
            let pano = io::load_panorama(panorama)?;
            let sun = detect_sun_direction(&pano)?;
            print_json(&json!({
                "direction": sun.direction.to_array(),
                "pixel": [sun.pixel.0, sun.pixel.1],
                "luminance": sun.luminance,
                "peak_ratio": sun.peak_ratio,
                "low_confidence": sun.low_confidence,
            }));
        }
        Command::Crop(a) => {
            let pano = io::load_panorama(&a.panorama)?;
            let cfg = sampler_config(g)?;
            let crop = match a.index {
                Some(idx) => {
                    let id = a
                        .panorama
                        .file_stem()
                        .and_then(|s| s.to_str())
                        .unwrap_or_default();
                    let mut c = sample_crop_params(&cfg, id, idx)?;
                    c.resolution = a.resolution.unwrap_or(c.resolution);
                    c
                }
                None => CropParams {
                    vertical_fov: a.vfov,
                    azimuth: a.azimuth,
                    elevation: a.elevation,
                    roll: a.roll,
                    resolution: a.resolution.unwrap_or(cfg.resolution),
                },
            };
            let linear = crop_perspective(&pano, &crop)?;
            ensure_parent(&a.out)?;
            let ext = a
                .out
                .extension()
                .and_then(|e| e.to_str())
                .map(str::to_ascii_lowercase);
            let scale = match ext.as_deref() {
                Some("png") => {
                    let n = normalize_mean_intensity(&linear)?;
                    io::write_ldr_png(&a.out, &tonemap_ldr(&n.image))?;
                    Some(n.scale)
                }
                Some("pfm") => {
                    io::write_rgb_pfm(&a.out, &linear)?;
                    None
                }
                Some("hdr") => {
                    io::write_hdr(&a.out, &linear)?;
                    None
                }
                _ => return Err(Error::Usage("--out must end in .png, .pfm or .hdr".into())),
            };
            print_json(&json!({ "crop": crop, "normalization_scale": scale }));
        }
        Command::Normals(a) => {
            let depth = load_depth(&a.depth)?;
            let cam = a.camera.intrinsics(depth.width(), depth.height())?;
            let normals = estimate_normals(&unproject(&depth, &cam)?)?;
            ensure_parent(&a.out)?;
            io::write_normals_pfm(&a.out, &normals)?;
            if let Some(png) = &a.png {
                io::write_normals_png(png, &normals)?;
            }
        }
        Command::Shadow(a) => {
            let depth = load_depth(&a.depth)?;
            let cam = a.camera.intrinsics(depth.width(), depth.height())?;
            let opacity = a
                .volume
                .opacity
                .unwrap_or_else(|| DensityVolume::default_opacity(a.volume.planes));
            let build = build_volume_from_depth(&depth, &cam, a.volume.planes, opacity)?;
            let light = DirectionalLight::toward(a.light, a.solid_angle)?;
            let params = ShadowParams {
                samples: a.samples,
                ..ShadowParams::for_planes(a.volume.planes, g.seed.unwrap_or(0))
            };
            let shadow =
                render_shadow_map(&build.volume, &unproject(&depth, &cam)?, &light, &params)?;
            ensure_parent(&a.out)?;
            io::write_gray_pfm(&a.out, shadow.raster())?;
        }
        Command::Shade(a) => {
            let normals = io::read_normals_pfm(&a.normals)?;
            let light = DirectionalLight::toward(a.light, SUN_SOLID_ANGLE)?;
            let cosine = ndotl(&normals, &light);
            let shadow = match &a.shadow {
                Some(p) => dskit_core::ShadowMap::new(io::read_gray_pfm(p)?)
                    .map_err(|e| Error::format(p, e.to_string()))?,
                None => dskit_core::ShadowMap::new(cosine.map(|_| 1.0))?,
            };
            let shading = compose_direct_shading(&cosine, &shadow)?;
            ensure_parent(&a.out)?;
            io::write_gray_pfm(&a.out, shading.raster())?;
            if let Some(png) = &a.png {
                io::write_shading_png(png, shading.raster())?;
            }
        }
        Command::Dataset(a) => {
            if g.config.is_none() {
                return Err(Error::Usage("dataset needs --config FILE".into()));
            }
            let cfg = sampler_config(g)?;
            let provider = DepthDir::new(&a.depths);
            let job = DatasetJob {
                pano_dir: &a.panos,
                depth_provider: &provider,
                config: &cfg,
                render: RenderOptions {
                    planes: a.volume.planes,
                    samples: a.samples,
                    solid_angle: a.solid_angle,
                    opacity: a.volume.opacity,
                },
                out_dir: &a.out,
                limit: a.limit,
                light_override: a.light,
            };
            let s = dataset::generate_dataset(&job)?;
            print_json(&json!({
                "manifest": a.out.join(dataset::MANIFEST_NAME),
                "panoramas": s.panoramas,
                "written": s.written,
                "already_done": s.already_done,
                "skipped": s.skipped,
                "records": s.records,
            }));
        }
        Command::Eval(a) => {
            let pairs = eval::read_pairs(&a.pairs)?;
            let report = eval::evaluate(&pairs, a.method.into())?;
            ensure_parent(&a.out)?;
            let text = serde_json::to_string_pretty(&report).map_err(|source| Error::Json {
                path: a.out.clone(),
                source,
            })?;
            fs::write(&a.out, text + "\n").map_err(|e| Error::io(&a.out, e))?;
            print_json(&serde_json::to_value(&report.aggregate).unwrap_or_default());
        }
        Command::VolumeDump(a) => {
            let depth = load_depth(&a.depth)?;
            let cam = a.camera.intrinsics(depth.width(), depth.height())?;
            let opacity = a
                .volume
                .opacity
                .unwrap_or_else(|| DensityVolume::default_opacity(a.volume.planes));
            let build = build_volume_from_depth(&depth, &cam, a.volume.planes, opacity)?;
            let vol = &build.volume;
            ensure_parent(&a.out)?;
            volume_file::write_volume(&a.out, vol)?;
            if let Some(dir) = &a.slices {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                for k in 0..vol.planes() {
                    let plane = dskit_core::GrayImage::from_vec(
                        vol.width(),
                        vol.height(),
                        vol.plane(k).to_vec(),
                    )?;
                    io::write_gray_pfm(&dir.join(format!("plane_{k:03}.pfm")), &plane)?;
                }
            }
            if let Some(path) = &a.expected_depth {
                let e = expected_depth(vol);
                let z = dskit_core::GrayImage::from_fn(vol.width(), vol.height(), |x, y| {
                    e.metric(x, y).unwrap_or(0.0) as f32
                });
                io::write_gray_pfm(path, &z)?;
            }
            print_json(&json!({
                "planes": vol.planes(),
                "width": vol.width(),
                "height": vol.height(),
                "near": vol.mapping().near,
                "far": vol.mapping().far,
                "clamped": build.clamped,
            }));
        }
    }
    Ok(())
}

fn init_logging(level: &str) {
    let _ = env_logger::Builder::new()
        .parse_filters(level)
        .format_timestamp(None)
        .try_init();
}

fn init_threads(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Usage(format!("thread pool: {e}")))
}

/// Error line on stderr: `{"error":{"kind":…,"message":…}}`.
pub fn error_line(e: &Error) -> String {
    json!({ "error": { "kind": e.kind(), "message": e.to_string() } }).to_string()
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let usage = Error::Usage(e.kind().to_string());
            eprintln!("{}", error_line(&usage));
            return ExitCode::from(2);
        }
    };
    init_logging(&cli.global.log_level);
    let result = init_threads(cli.global.threads).and_then(|_| run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::from(if matches!(e, Error::Usage(_)) { 2 } else { 1 })
        }
    }
}
