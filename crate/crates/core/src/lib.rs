//! Slope-aware terrain numerics for coarse-to-fine height estimation.
//!
//! The crate is organised around [`raster::HeightGrid`], a row-major height
//! raster with a nodata sentinel. On top of it sit:
//!
//! - [`slope`]: 3×3 slope magnitude, slope-direction codes and slope factors;
//! - [`partition`]: per-pixel uncertainty ranges and hypothesis-plane layouts;
//! - [`correction`]: the scaled 3×3 Gaussian height correction;
//! - [`loss`]: stage-weighted height and slope-direction losses;
//! - [`metrics`]: DSM evaluation (MAE, RMSE, threshold percentages, median, completeness);
//! - [`simulate`]: a three-stage refinement harness driven by an oracle matcher.

pub mod correction;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod partition;
pub mod raster;
pub mod simulate;
pub mod slope;

mod sum;

pub use error::{Error, Result};
pub use raster::{HeightGrid, SlopeDirectionGrid, ValidMask};
