//! Height correction with a scaled 3×3 Gaussian kernel.
//!
//! The kernel is the binomial pattern `[1 2 1; 2 4 2; 1 2 1] / 16` times a
//! scalar scale `i`. Windows follow the same padding and nodata rules as
//! [`crate::slope`].

use crate::error::{Error, Result};
use crate::raster::HeightGrid;
use crate::slope::window;
use crate::sum::pairwise_sum;

const BASE_WEIGHTS: [f64; 9] = [
    1.0 / 16.0,
    1.0 / 8.0,
    1.0 / 16.0,
    1.0 / 8.0,
    1.0 / 4.0,
    1.0 / 8.0,
    1.0 / 16.0,
    1.0 / 8.0,
    1.0 / 16.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel {
    scale: f64,
    weights: [f64; 9],
}

impl GaussianKernel {
    pub fn new(scale: f64) -> Result<Self> {
        if !scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "kernel scale must be finite, got {scale}"
            )));
        }
        Ok(Self {
            scale,
            weights: BASE_WEIGHTS.map(|w| w * scale),
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Row-major weights.
    pub fn weights(&self) -> &[f64; 9] {
        &self.weights
    }

    fn apply(&self, window: &[f64; 9]) -> f64 {
        let mut acc = 0.0;
        for (w, v) in self.weights.iter().zip(window) {
            acc += w * v;
        }
        acc
    }
}

impl Default for GaussianKernel {
    fn default() -> Self {
        Self::new(1.0).expect("unit scale is finite")
    }
}

/// Convolves valid pixels with `kernel`; invalid pixels stay invalid.
pub fn correct(height: &HeightGrid, kernel: &GaussianKernel) -> HeightGrid {
    let cols = height.cols();
    height
        .map_valid(|i, _| kernel.apply(&window(height, i / cols, i % cols).0))
        .expect("correction keeps the input geometry")
}

/// Least-squares scale `i* = <C, T> / <C, C>` with `C = correct(noisy, i = 1)`,
/// over pixels valid in both grids.
pub fn fit_scale(noisy: &HeightGrid, target: &HeightGrid) -> Result<GaussianKernel> {
    noisy.check_dims(target.dims())?;
    let smoothed = correct(noisy, &GaussianKernel::default());
    let mut cross = Vec::new();
    let mut power = Vec::new();
    for i in 0..noisy.len() {
        if let (Some(c), Some(t)) = (smoothed.value(i), target.value(i)) {
            cross.push(c * t);
            power.push(c * c);
        }
    }
    if power.is_empty() {
        return Err(Error::EmptyJointMask(" for kernel fit".into()));
    }
    let denom = pairwise_sum(&power);
    if denom == 0.0 {
        return Err(Error::DegenerateFit);
    }
    GaussianKernel::new(pairwise_sum(&cross) / denom)
}
