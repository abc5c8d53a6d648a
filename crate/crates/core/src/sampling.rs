//! Randomized virtual-camera parameters for panorama crops.
//!
//! Every draw is keyed by `(global_seed, pano_id, crop_idx)` through a
//! ChaCha8 stream, so any single crop can be regenerated in isolation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Triangular, Uniform};

use crate::error::{invalid, Result};
use crate::math::mix64;
use crate::panorama::CropParams;

/// Crop sampler configuration. Angles in degrees, ranges as `[min, max]`.
///
/// Vertical FOV and azimuth are uniform; elevation and roll are triangular
/// with mode 0 (clamped into the range).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SamplerConfig {
    pub crops_per_pano: usize,
    pub resolution: usize,
    pub vfov: [f64; 2],
    pub azimuth: [f64; 2],
    pub elevation: [f64; 2],
    pub roll: [f64; 2],
    pub global_seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            crops_per_pano: 250,
            resolution: 512,
            vfov: [30.0, 110.0],
            azimuth: [0.0, 360.0],
            elevation: [-22.5, 22.5],
            roll: [-22.5, 22.5],
            global_seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.crops_per_pano == 0 {
            return Err(invalid("crops_per_pano", "must be at least 1"));
        }
        if self.resolution == 0 {
            return Err(invalid("resolution", "must be at least 1"));
        }
        let ordered = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
        if !ordered(self.vfov) || self.vfov[0] <= 0.0 || self.vfov[1] >= 180.0 {
            return Err(invalid("vfov", "need 0 < min < max < 180"));
        }
        if !ordered(self.azimuth) {
            return Err(invalid("azimuth", "need min < max"));
        }
        if !ordered(self.elevation) || self.elevation[0] < -90.0 || self.elevation[1] > 90.0 {
            return Err(invalid("elevation", "need −90 ≤ min < max ≤ 90"));
        }
        if !ordered(self.roll) {
            return Err(invalid("roll", "need min < max"));
        }
        Ok(())
    }
}

/// 64-bit FNV-1a of the panorama id.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ *b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn crop_rng(seed: u64, pano_id: &str, crop_idx: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&fnv1a(pano_id.as_bytes()).to_le_bytes());
    key[16..24].copy_from_slice(&crop_idx.to_le_bytes());
    key[24..].copy_from_slice(b"dskcrop1");
    ChaCha8Rng::from_seed(key)
}

/// Stable 64-bit seed for everything else drawn for one crop (shadow cone
/// rotations, for instance), independent of the crop-parameter stream.
pub fn sample_seed(seed: u64, pano_id: &str, crop_idx: u64) -> u64 {
    mix64(seed ^ mix64(fnv1a(pano_id.as_bytes()) ^ mix64(crop_idx)))
}

fn triangular(range: [f64; 2]) -> Triangular<f64> {
    let mode = 0.0f64.clamp(range[0], range[1]);
    Triangular::new(range[0], range[1], mode).expect("validated range")
}

/// Camera parameters for crop `crop_idx` of panorama `pano_id`.
pub fn sample_crop_params(cfg: &SamplerConfig, pano_id: &str, crop_idx: u64) -> Result<CropParams> {
    cfg.validate()?;
    let mut rng = crop_rng(cfg.global_seed, pano_id, crop_idx);
    let vfov = Uniform::new(cfg.vfov[0], cfg.vfov[1]).expect("validated range");
    let azimuth = Uniform::new(cfg.azimuth[0], cfg.azimuth[1]).expect("validated range");
    Ok(CropParams {
        vertical_fov: vfov.sample(&mut rng),
        azimuth: azimuth.sample(&mut rng),
        elevation: triangular(cfg.elevation).sample(&mut rng),
        roll: triangular(cfg.roll).sample(&mut rng),
        resolution: cfg.resolution,
    })
}
