//! Paired-sample generation: crop → normalize → tonemap → depth → normals →
//! volume → shadows → shading, plus the JSON-lines manifest.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use dskit_core::panorama::{crop_perspective, normalize_mean_intensity, tonemap_ldr};
use dskit_core::volume::{
    build_volume_from_depth, render_shadow_map_masked, DEFAULT_PLANES, DEFAULT_SHADOW_SAMPLES,
    SUN_SOLID_ANGLE,
};
use dskit_core::{
    compose_direct_shading, detect_sun_direction, estimate_normals, ndotl, sample_crop_params,
    sample_seed, unproject, CameraIntrinsics, CropParams, DensityVolume, DepthMap,
    DirectionalLight, HdrPanorama, NormalMap, RgbImage, SamplerConfig, ShadingMap, ShadowParams,
    SunEstimate, Vec3,
};

use crate::io;
use crate::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.jsonl";

/// Reads a sampler config, rejecting unknown keys.
pub fn load_config(path: &Path) -> Result<SamplerConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: SamplerConfig = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Supplies metric depth for a crop.
pub trait DepthProvider: Sync {
    /// `Ok(None)` when no depth exists for this crop.
    fn depth(&self, pano_id: &str, crop_idx: u64, ldr: &RgbImage) -> Result<Option<DepthMap>>;

    fn prompt(&self, _pano_id: &str, _crop_idx: u64) -> Result<String> {
        Ok(String::new())
    }
}

/// Depth from `{root}/{pano_id}_{idx:04}.pfm`, prompt from the `.txt` sidecar.
#[derive(Debug, Clone)]
pub struct DepthDir {
    root: PathBuf,
}

impl DepthDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn path(&self, pano_id: &str, crop_idx: u64, ext: &str) -> PathBuf {
        self.root.join(format!("{pano_id}_{crop_idx:04}.{ext}"))
    }

    pub fn load(&self, pano_id: &str, crop_idx: u64) -> Result<Option<DepthMap>> {
        let path = self.path(pano_id, crop_idx, "pfm");
        if !path.exists() {
            return Ok(None);
        }
        let z = io::read_gray_pfm(&path)?;
        DepthMap::new(z)
            .map(Some)
            .map_err(|e| Error::format(&path, e.to_string()))
    }
}

impl DepthProvider for DepthDir {
    fn depth(&self, pano_id: &str, crop_idx: u64, _ldr: &RgbImage) -> Result<Option<DepthMap>> {
        self.load(pano_id, crop_idx)
    }

    fn prompt(&self, pano_id: &str, crop_idx: u64) -> Result<String> {
        let path = self.path(pano_id, crop_idx, "txt");
        match fs::read_to_string(&path) {
            Ok(s) => Ok(s.trim_end().to_owned()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(String::new()),
            Err(e) => Err(Error::io(path, e)),
        }
    }
}

/// User-facing render options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub planes: usize,
    pub samples: usize,
    pub solid_angle: f64,
    /// Per-plane opacity; `None` uses [`DensityVolume::default_opacity`].
    pub opacity: Option<f64>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            planes: DEFAULT_PLANES,
            samples: DEFAULT_SHADOW_SAMPLES,
            solid_angle: SUN_SOLID_ANGLE,
            opacity: None,
        }
    }
}

impl RenderOptions {
    /// Fully resolved settings for one sample.
    pub fn resolve(&self, seed: u64) -> RenderSettings {
        let shadow = ShadowParams::for_planes(self.planes, seed);
        RenderSettings {
            planes: self.planes,
            samples: self.samples,
            step: shadow.step,
            opacity: self
                .opacity
                .unwrap_or_else(|| DensityVolume::default_opacity(self.planes)),
            solid_angle: self.solid_angle,
            seed,
        }
    }
}

/// Everything needed to re-render a sample's shading from its depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderSettings {
    pub planes: usize,
    pub samples: usize,
    pub step: f64,
    pub opacity: f64,
    pub solid_angle: f64,
    pub seed: u64,
}

impl RenderSettings {
    fn shadow_params(&self) -> ShadowParams {
        ShadowParams {
            samples: self.samples,
            step: self.step,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LightSource {
    Sun,
    Override,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightRecord {
    pub world: [f64; 3],
    pub camera: [f64; 3],
    pub solid_angle: f64,
    pub source: LightSource,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthRecord {
    pub near: f64,
    pub far: f64,
    /// Pixels whose depth fell outside `[near, far]`.
    pub clamped: usize,
}

/// One manifest line. Paths are relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub pano_id: String,
    pub crop_index: u64,
    pub image: String,
    pub normal_map: String,
    pub shading_map: String,
    pub shading_png: String,
    pub resolution: usize,
    pub crop: CropParams,
    pub light: LightRecord,
    pub normalization_scale: f64,
    pub prompt: String,
    pub render: RenderSettings,
    pub depth: DepthRecord,
}

impl ManifestRecord {
    pub fn key(&self) -> (String, u64) {
        (self.pano_id.clone(), self.crop_index)
    }
}

/// In-memory sample before it is written.
#[derive(Debug, Clone)]
pub struct DatasetSample {
    /// Tonemapped LDR crop in `[0, 1)`.
    pub image: RgbImage,
    pub normals: NormalMap,
    pub shading: ShadingMap,
    pub record: ManifestRecord,
}

/// Geometry and shading for one crop.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub normals: NormalMap,
    pub shading: ShadingMap,
    pub depth: DepthRecord,
}

/// Normals and direct shading for a depth map seen through `crop`, with the
/// light given in the camera frame.
pub fn render_shading(
    depth: &DepthMap,
    crop: &CropParams,
    light_camera: Vec3,
    settings: &RenderSettings,
) -> Result<Rendered> {
    let cam = CameraIntrinsics::new(crop.focal_px(), crop.resolution, crop.resolution)?;
    if depth.shape() != cam.shape() {
        return Err(dskit_core::Error::ShapeMismatch {
            expected: cam.shape(),
            found: depth.shape(),
        }
        .into());
    }
    let light = DirectionalLight::toward(light_camera, settings.solid_angle)?;
    let points = unproject(depth, &cam)?;
    let normals = estimate_normals(&points)?;
    let cosine = ndotl(&normals, &light);
    let build = build_volume_from_depth(depth, &cam, settings.planes, settings.opacity)?;
    let lit: Vec<bool> = cosine.as_slice().iter().map(|c| *c > 0.0).collect();
    let shadow = render_shadow_map_masked(
        &build.volume,
        &points,
        &light,
        &settings.shadow_params(),
        Some(&lit),
    )?;
    let shading = compose_direct_shading(&cosine, &shadow)?;
    let mapping = build.volume.mapping();
    Ok(Rendered {
        normals,
        shading,
        depth: DepthRecord {
            near: mapping.near,
            far: mapping.far,
            clamped: build.clamped,
        },
    })
}

/// Re-renders a record's shading from its stored crop, light and settings.
pub fn rerender(record: &ManifestRecord, depth: &DepthMap) -> Result<Rendered> {
    render_shading(
        depth,
        &record.crop,
        Vec3::from_array(record.light.camera),
        &record.render,
    )
}

fn sample_paths(pano_id: &str, crop_idx: u64) -> [String; 4] {
    ["image.png", "normal.pfm", "shading.pfm", "shading.png"]
        .map(|s| format!("{pano_id}/{crop_idx:04}_{s}"))
}

/// Builds one sample. `Ok(None)` means no depth was available.
///
/// `light_override` is a camera-frame direction toward the light; otherwise
/// `sun` (world frame) is rotated into the crop's camera frame.
#[allow(clippy::too_many_arguments)]
pub fn generate_sample(
    pano: &HdrPanorama,
    sun: Option<&SunEstimate>,
    depth_provider: &dyn DepthProvider,
    cfg: &SamplerConfig,
    render: &RenderOptions,
    pano_id: &str,
    crop_idx: u64,
    light_override: Option<Vec3>,
) -> Result<Option<DatasetSample>> {
    let crop = sample_crop_params(cfg, pano_id, crop_idx)?;
    let linear = crop_perspective(pano, &crop)?;
    let normalized = normalize_mean_intensity(&linear)?;
    let image = tonemap_ldr(&normalized.image);
    let Some(depth) = depth_provider.depth(pano_id, crop_idx, &image)? else {
        warn!("no depth for {pano_id}/{crop_idx:04}, skipping");
        return Ok(None);
    };

    let (camera, world, source, low_confidence) = match (light_override, sun) {
        (Some(l), _) => {
            let camera = l
                .try_normalize()
                .ok_or_else(|| Error::Usage("light direction must be non-zero".into()))?;
            (
                camera,
                (crop.camera_to_world() * camera).normalized(),
                LightSource::Override,
                false,
            )
        }
        (None, Some(sun)) => {
            let camera = (crop.world_to_camera() * sun.direction).normalized();
            (camera, sun.direction, LightSource::Sun, sun.low_confidence)
        }
        (None, None) => {
            return Err(Error::Usage(
                "no light: pass a sun estimate or a light override".into(),
            ))
        }
    };

    let settings = render.resolve(sample_seed(cfg.global_seed, pano_id, crop_idx));
    let rendered = render_shading(&depth, &crop, camera, &settings)?;
    let [image_path, normal_path, shading_path, shading_png] = sample_paths(pano_id, crop_idx);
    let record = ManifestRecord {
        pano_id: pano_id.to_owned(),
        crop_index: crop_idx,
        image: image_path,
        normal_map: normal_path,
        shading_map: shading_path,
        shading_png,
        resolution: crop.resolution,
        crop,
        light: LightRecord {
            world: world.to_array(),
            camera: camera.to_array(),
            solid_angle: settings.solid_angle,
            source,
            low_confidence,
        },
        normalization_scale: normalized.scale,
        prompt: depth_provider.prompt(pano_id, crop_idx)?,
        render: settings,
        depth: rendered.depth,
    };
    Ok(Some(DatasetSample {
        image,
        normals: rendered.normals,
        shading: rendered.shading,
        record,
    }))
}

/// Writes a sample's rasters under `out_dir`.
pub fn write_sample(out_dir: &Path, sample: &DatasetSample) -> Result<()> {
    let r = &sample.record;
    let dir = out_dir.join(&r.pano_id);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    io::write_ldr_png(&out_dir.join(&r.image), &sample.image)?;
    io::write_normals_pfm(&out_dir.join(&r.normal_map), &sample.normals)?;
    io::write_gray_pfm(&out_dir.join(&r.shading_map), sample.shading.raster())?;
    io::write_shading_png(&out_dir.join(&r.shading_png), sample.shading.raster())
}

/// Reads manifest records, dropping a trailing partial line.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    Ok(read_manifest_lines(path)?
        .into_iter()
        .map(|(r, _)| r)
        .collect())
}

fn read_manifest_lines(path: &Path) -> Result<Vec<(ManifestRecord, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut lines = BufReader::new(file).lines().peekable();
    while let Some(line) = lines.next() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => records.push((r, line)),
            Err(e) if lines.peek().is_none() => {
                warn!("{}: ignoring truncated last line ({e})", path.display())
            }
            Err(source) => {
                return Err(Error::Json {
                    path: path.into(),
                    source,
                })
            }
        }
    }
    Ok(records)
}

/// Panorama files in `dir`, sorted, with their ids (file stems).
pub fn list_panoramas(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut panos = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && io::is_panorama_file(&path) {
            let id = path.file_stem().and_then(|s| s.to_str()).map(str::to_owned);
            let id = id.ok_or_else(|| Error::format(&path, "panorama name is not UTF-8"))?;
            panos.push((id, path));
        }
    }
    panos.sort();
    for pair in panos.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::format(
                &pair[1].1,
                format!("duplicate panorama id {:?}", pair[1].0),
            ));
        }
    }
    Ok(panos)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetSummary {
    pub panoramas: usize,
    pub written: usize,
    pub already_done: usize,
    /// Missing depth or a degenerate crop.
    pub skipped: usize,
    pub records: usize,
}

#[derive(Clone)]
pub struct DatasetJob<'a> {
    pub pano_dir: &'a Path,
    pub depth_provider: &'a dyn DepthProvider,
    pub config: &'a SamplerConfig,
    pub render: RenderOptions,
    pub out_dir: &'a Path,
    /// Only the first `limit` samples in (panorama, crop index) order.
    pub limit: Option<usize>,
    pub light_override: Option<Vec3>,
}

const CHUNK: usize = 16;

/// Generates every sample not already in the manifest.
///
/// Samples run in parallel on the current rayon pool; records are appended in
/// (panorama, crop index) order, so output does not depend on thread count.
pub fn generate_dataset(job: &DatasetJob<'_>) -> Result<DatasetSummary> {
    job.config.validate()?;
    fs::create_dir_all(job.out_dir).map_err(|e| Error::io(job.out_dir, e))?;
    let manifest_path = job.out_dir.join(MANIFEST_NAME);
    let existing = if manifest_path.exists() {
        read_manifest_lines(&manifest_path)?
    } else {
        Vec::new()
    };
    // Rewrite so a truncated trailing line from an interrupted run is dropped.
    let mut manifest = File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    for (_, line) in &existing {
        write_line(&mut manifest, &manifest_path, line.clone())?;
    }
    let done: HashSet<(String, u64)> = existing.iter().map(|(r, _)| r.key()).collect();

    let panos = list_panoramas(job.pano_dir)?;
    let mut summary = DatasetSummary {
        panoramas: panos.len(),
        records: existing.len(),
        ..Default::default()
    };
    let mut budget = job.limit.unwrap_or(usize::MAX);
    for (pano_id, path) in &panos {
        let take = budget.min(job.config.crops_per_pano);
        budget -= take;
        let todo: Vec<u64> = (0..take as u64)
            .filter(|i| !done.contains(&(pano_id.clone(), *i)))
            .collect();
        summary.already_done += take - todo.len();
        if todo.is_empty() {
            continue;
        }
        let pano = io::load_panorama(path)?;
        let sun = if job.light_override.is_some() {
            None
        } else {
            match detect_sun_direction(&pano) {
                Ok(sun) => {
                    if sun.low_confidence {
                        warn!("{pano_id}: weak sun peak (ratio {:.2})", sun.peak_ratio);
                    }
                    Some(sun)
                }
                Err(e) => {
                    warn!("{pano_id}: {e}, skipping panorama");
                    continue;
                }
            }
        };
        info!("{pano_id}: {} crops", todo.len());
        for chunk in todo.chunks(CHUNK) {
            let results: Vec<Result<Option<ManifestRecord>>> = chunk
                .par_iter()
                .map(|&idx| {
                    let sample = generate_sample(
                        &pano,
                        sun.as_ref(),
                        job.depth_provider,
                        job.config,
                        &job.render,
                        pano_id,
                        idx,
                        job.light_override,
                    );
                    match sample {
                        Ok(Some(s)) => write_sample(job.out_dir, &s).map(|_| Some(s.record)),
                        Ok(None) => Ok(None),
                        Err(Error::Core(e)) => {
                            warn!("{pano_id}/{idx:04}: {e}, skipping");
                            Ok(None)
                        }
                        Err(e) => Err(e),
                    }
                })
                .collect();
            for result in results {
                match result? {
                    Some(record) => {
                        append_record(&mut manifest, &manifest_path, &record)?;
                        summary.written += 1;
                        summary.records += 1;
                    }
                    None => summary.skipped += 1,
                }
            }
        }
    }
    Ok(summary)
}

fn append_record(file: &mut File, path: &Path, record: &ManifestRecord) -> Result<()> {
    let line = serde_json::to_string(record).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    write_line(file, path, line)
}

fn write_line(file: &mut File, path: &Path, mut line: String) -> Result<()> {
    line.push('\n');
    file.write_all(line.as_bytes())
        .and_then(|_| file.flush())
        .map_err(|e| Error::io(path, e))
}
