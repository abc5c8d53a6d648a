//! Shading PSNR and dominant-light angular error over pairs of shading maps.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use dskit_core::{angular_error, dominant_light_direction, psnr, DominantMethod, ShadingMap};

use crate::io;
use crate::{Error, Result};

pub const ESTIMATOR_NOTE: &str =
    "light directions are a least-squares Lambertian fit of s = max(0, n.l) over \
     lit pixels; a stand-in estimator, not a learned one";

/// One line of the pairs file. Relative paths resolve against the pairs file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    #[serde(default)]
    pub id: Option<String>,
    pub reference: PathBuf,
    pub candidate: PathBuf,
    pub normals: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub id: String,
    pub psnr_db: f64,
    /// `None` when either map has too few lit pixels for a light fit.
    pub angular_error_deg: Option<f64>,
    pub reference_light: Option<[f64; 3]>,
    pub candidate_light: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = match n {
            0 => None,
            _ if n % 2 == 1 => Some(v[n / 2]),
            _ => Some(0.5 * (v[n / 2 - 1] + v[n / 2])),
        };
        Self {
            count: n,
            mean: (n > 0).then(|| v.iter().sum::<f64>() / n as f64),
            median,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub psnr_db: Summary,
    pub angular_error_deg: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: DominantMethod,
    pub light_estimator: String,
    pub pairs: Vec<PairResult>,
    pub aggregate: Aggregate,
}

pub fn read_pairs(path: &Path) -> Result<Vec<PairSpec>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let mut p: PairSpec = serde_json::from_str(line).map_err(|source| Error::Json {
                path: path.into(),
                source,
            })?;
            for f in [&mut p.reference, &mut p.candidate, &mut p.normals] {
                if f.is_relative() {
                    *f = base.join(&*f);
                }
            }
            Ok(p)
        })
        .collect()
}

pub fn evaluate_pair(pair: &PairSpec, index: usize, method: DominantMethod) -> Result<PairResult> {
    let reference = io::read_gray_pfm(&pair.reference)?;
    let candidate = io::read_gray_pfm(&pair.candidate)?;
    let normals = io::read_normals_pfm(&pair.normals)?;
    let in_range = |p: &Path, img: &dskit_core::GrayImage| {
        ShadingMap::new(img.clone()).map_err(|e| Error::format(p, e.to_string()))
    };
    let reference = in_range(&pair.reference, &reference)?;
    let candidate = in_range(&pair.candidate, &candidate)?;
    let psnr_db = psnr(
        reference.raster().as_slice(),
        candidate.raster().as_slice(),
        1.0,
    )?;
    let lights = dominant_light_direction(&reference, &normals, method)
        .and_then(|r| Ok((r, dominant_light_direction(&candidate, &normals, method)?)));
    let id = pair.id.clone().unwrap_or_else(|| index.to_string());
    Ok(match lights {
        Ok((r, c)) => PairResult {
            id,
            psnr_db,
            angular_error_deg: Some(angular_error(r, c)),
            reference_light: Some(r.to_array()),
            candidate_light: Some(c.to_array()),
            note: None,
        },
        Err(e @ dskit_core::Error::Underdetermined { .. }) => PairResult {
            id,
            psnr_db,
            angular_error_deg: None,
            reference_light: None,
            candidate_light: None,
            note: Some(e.to_string()),
        },
        Err(e) => return Err(e.into()),
    })
}

pub fn evaluate(pairs: &[PairSpec], method: DominantMethod) -> Result<EvalReport> {
    let results = pairs
        .par_iter()
        .enumerate()
        .map(|(i, p)| evaluate_pair(p, i, method))
        .collect::<Result<Vec<_>>>()?;
    let psnrs: Vec<f64> = results.iter().map(|r| r.psnr_db).collect();
    let errors: Vec<f64> = results.iter().filter_map(|r| r.angular_error_deg).collect();
    Ok(EvalReport {
        method,
        light_estimator: ESTIMATOR_NOTE.to_owned(),
        aggregate: Aggregate {
            psnr_db: Summary::of(&psnrs),
            angular_error_deg: Summary::of(&errors),
        },
        pairs: results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_median() {
        let s = Summary::of(&[3.0, 1.0, 2.0, 10.0]);
        assert_eq!(s.count, 4);
        assert_eq!(s.median, Some(2.5));
        assert_eq!(s.mean, Some(4.0));
        assert_eq!(Summary::of(&[]).mean, None);
    }
}
