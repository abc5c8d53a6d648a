//! Lighting-consistency metrics: PSNR, angular error, and a fit-based
//! dominant light direction.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::NormalMap;
use crate::math::{self, Mat3, Vec3};
use crate::shading::ShadingMap;

/// Reports never exceed this many dB.
pub const PSNR_CAP_DB: f64 = 100.0;

/// Pixels with shading above this count as lit for the light fit.
pub const LIT_THRESHOLD: f32 = 0.05;

/// Minimum number of lit pixels for [`dominant_light_direction`].
pub const MIN_LIT_PIXELS: usize = 100;

/// `10·log10(peak² / MSE)`, capped at 100 dB when `MSE < peak²·10⁻¹⁰`.
pub fn psnr(a: &[f32], b: &[f32], peak: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            expected: (a.len(), 1),
            found: (b.len(), 1),
        });
    }
    if a.is_empty() {
        return Ok(PSNR_CAP_DB);
    }
    let sse: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum();
    let mse = sse / a.len() as f64;
    let peak2 = peak * peak;
    if mse < peak2 * 1e-10 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * math::log10(peak2 / mse)).min(PSNR_CAP_DB))
}

/// Angle in degrees between two unit vectors.
pub fn angular_error(d1: Vec3, d2: Vec3) -> f64 {
    math::to_degrees(math::acos(d1.dot(d2).clamp(-1.0, 1.0)))
}

/// How the dominant direction is extracted from a shading map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum DominantMethod {
    /// Huber-reweighted least squares on lit pixels.
    #[default]
    Irls,
    /// Single ordinary least-squares solve on lit pixels.
    Linear,
}

const IRLS_ITERATIONS: usize = 20;
const HUBER_K: f64 = 1.345;

/// Fits `l` in `s ≈ n·l` over pixels with `s > 0.05` and returns `l/‖l‖`.
///
/// Pixels below the threshold are treated as shadowed and carry no
/// information about `l`. Partial shadows inside the lit set are handled by
/// Huber reweighting with a MAD scale estimate, which keeps the fit
/// invariant to a positive rescaling of the shading.
pub fn dominant_light_direction(
    shading: &ShadingMap,
    normals: &NormalMap,
    method: DominantMethod,
) -> Result<Vec3> {
    normals.ensure_shape(shading.raster().shape())?;
    let samples: Vec<(Vec3, f64)> = shading
        .raster()
        .as_slice()
        .iter()
        .zip(normals.as_slice())
        .filter(|(s, _)| **s > LIT_THRESHOLD)
        .map(|(s, n)| (*n, *s as f64))
        .collect();
    if samples.len() < MIN_LIT_PIXELS {
        return Err(Error::Underdetermined {
            lit: samples.len(),
            required: MIN_LIT_PIXELS,
        });
    }
    let underdetermined = || Error::Underdetermined {
        lit: samples.len(),
        required: MIN_LIT_PIXELS,
    };

    let mut weights: Vec<f64> = alloc::vec![1.0; samples.len()];
    let mut l = weighted_solve(&samples, &weights).ok_or_else(underdetermined)?;
    if method == DominantMethod::Irls {
        let mut residuals: Vec<f64> = Vec::with_capacity(samples.len());
        for _ in 0..IRLS_ITERATIONS {
            residuals.clear();
            residuals.extend(samples.iter().map(|(n, s)| s - n.dot(l)));
            let scale = mad_scale(&residuals);
            if !(scale > 1e-12) {
                break;
            }
            let k = HUBER_K * scale;
            for (w, r) in weights.iter_mut().zip(&residuals) {
                *w = if r.abs() <= k { 1.0 } else { k / r.abs() };
            }
            let next = weighted_solve(&samples, &weights).ok_or_else(underdetermined)?;
            let done = (next - l).norm() <= 1e-12 * l.norm();
            l = next;
            if done {
                break;
            }
        }
    }
    l.try_normalize().ok_or_else(underdetermined)
}

fn weighted_solve(samples: &[(Vec3, f64)], weights: &[f64]) -> Option<Vec3> {
    let mut ata = [[0.0; 3]; 3];
    let mut atb = Vec3::ZERO;
    for ((n, s), w) in samples.iter().zip(weights) {
        let a = n.to_array();
        for r in 0..3 {
            for c in 0..3 {
                ata[r][c] += w * a[r] * a[c];
            }
        }
        atb += *n * (w * s);
    }
    Mat3(ata).solve(atb)
}

fn mad_scale(residuals: &[f64]) -> f64 {
    let mut abs: Vec<f64> = residuals.iter().map(|r| r.abs()).collect();
    let mid = abs.len() / 2;
    let (_, m, _) = abs.select_nth_unstable_by(mid, f64::total_cmp);
    1.4826 * *m
}
