//! Geometric and radiometric core for generating direct-shading datasets
//! from HDR panoramas.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function
//! over immutable inputs; file formats, the dataset pipeline and the CLI live
//! in the `dskit` companion crate.
//!
//! Conventions:
//!
//! * World frame is Y-up. A latitude-longitude panorama maps `u ∈ [0, 1)` to
//!   azimuth `φ = 2πu − π` (measured from +Z toward +X) and `v ∈ [0, 1]` to the
//!   polar angle `θ = πv`.
//! * Camera frame is +X right, +Y down, +Z forward. Normals face the camera
//!   (`n_z ≤ 0` for surfaces seen head-on).
//! * The density volume lives in normalized device coordinates: `x, y ∈ [0, 1]`
//!   across the image and `d ∈ [0, 1]` linear in disparity between near and far.
#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod geometry;
pub mod math;
pub mod metrics;
pub mod panorama;
pub mod raster;
pub mod sampling;
pub mod shading;
pub mod volume;

pub use error::{Error, Result};
pub use geometry::{
    estimate_normals, unproject, CameraIntrinsics, DepthMap, NormalMap, PointCloud,
};
pub use math::{Mat3, Vec3};
pub use metrics::{angular_error, dominant_light_direction, psnr, DominantMethod};
pub use panorama::{
    crop_perspective, detect_sun_direction, normalize_mean_intensity, tonemap_ldr, CropParams,
    HdrPanorama, SunEstimate,
};
pub use raster::{GrayImage, Raster, RgbImage};
pub use sampling::{sample_crop_params, sample_seed, SamplerConfig};
pub use shading::{compose_direct_shading, ndotl, ShadingMap};
pub use volume::{
    build_volume_from_depth, expected_depth, render_shadow_map, DensityVolume, DirectionalLight,
    ExpectedDepth, NdcMapping, ShadowMap, ShadowParams, VolumeBuild,
};
