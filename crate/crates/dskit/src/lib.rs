//! File formats, dataset generation and evaluation on top of [`dskit_core`].
//!
//! * [`io`]: Radiance RGBE and PFM readers, PFM and sRGB PNG writers.
//! * [`volume_file`]: the `DSKV1` density-volume container.
//! * [`dataset`]: crop → normalize → tonemap → depth → normals → shadows →
//!   shading, written as paired samples plus a JSON-lines manifest.
//! * [`eval`]: shading PSNR and light angular error over pairs of shading maps.
//! * [`cli`]: the `dskit` command line.

pub mod cli;
pub mod dataset;
mod error;
pub mod eval;
pub mod io;
pub mod volume_file;

pub use error::{Error, Result};
