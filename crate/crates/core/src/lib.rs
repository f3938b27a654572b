//! Training-pair factory for NeRF-artifact restoration.
//!
//! * [`image`]: float image buffers, CIELAB conversion, Gaussian kernels,
//!   convolution, resampling and PNG/PPM I/O.
//! * [`degrade`]: the hand-crafted degradation simulator (splatted noise,
//!   re-positioning, anisotropic blur, illumination jetting, lightness
//!   compression) with region-adaptive masks and seeded recipes.
//! * [`viewsel`]: reference-view selection from camera poses by mutual
//!   nearest-point matching cost on a bounding sphere.
//! * [`wks`]: weighted top-K patch similarity loss and multi-scale L1.
//! * [`pipeline`]: dataset ingestion, paired-sample generation with
//!   manifests and verification, and corpus quality reports.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod degrade;
pub mod error;
pub mod image;
pub mod pipeline;
pub mod rng;
pub mod viewsel;
pub mod wks;

pub use error::{NdsError, Result};
pub use image::ImageBuffer;

/// Version of the recipe, config and manifest JSON schemas.
pub const SCHEMA_VERSION: u32 = 1;
