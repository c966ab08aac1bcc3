//! Multi-satellite deforestation mapping.
//!
//! The crate turns single-band satellite tiles (Sentinel-1, Sentinel-2,
//! Landsat 8) into one binary deforestation map per `(lon, lat, year, month)`
//! query:
//!
//! 1. [`catalog`] indexes tiles by filename and resolves queries to
//!    band-complete image sets.
//! 2. [`preprocess`] selects the relevant bands, resizes Landsat to the
//!    256×256 grid and normalizes every channel to `[0, 1]`.
//! 3. [`segment`] produces a per-image probability mask, either from the
//!    built-in NBR segmenter or by importing externally generated masks.
//! 4. [`fusion`] rejects outlier predictions with two rounds of sigma
//!    clipping on their deforestation ratios, averages the survivors,
//!    thresholds the mean and cleans the result with a morphological opening.
//! 5. [`metrics`] scores fused maps against labels.
//!
//! [`synth`] generates deterministic corpora with known ground truth and
//! [`pipeline`] wires the stages into the directory-level batch operations
//! used by the `fg` command-line tool.

pub mod catalog;
pub mod config;
pub mod error;
pub mod fusion;
pub mod indices;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod raster;
pub mod segment;
pub mod synth;

pub use error::{Error, Result};
pub use raster::{BandRaster, BinaryMask, Date, GridCoord, ProbabilityMask, Satellite, TILE_SIZE};
