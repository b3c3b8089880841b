//! Height-based slope: slope magnitude, slope-direction codes and slope factors.
//!
//! Every quantity is derived from the 3×3 neighbourhood of a pixel. Slope is a
//! plain height difference in meters (no division by cell size).
//!
//! Window rules shared with [`crate::correction`]:
//! - positions outside the grid take the value of the nearest in-bounds pixel
//!   (replicate padding);
//! - nodata neighbours take the centre value;
//! - both kinds of substituted position are flagged in
//!   [`NeighborhoodExtract::valid_flags`].

use crate::error::{Error, Result};
use crate::raster::{HeightGrid, SlopeDirectionGrid, ValidMask};

/// 3×3 window around one pixel, row-major (`0` = upper-left, `8` = lower-right).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborhoodExtract {
    pub center: f64,
    pub neighbors: [f64; 9],
    pub valid_flags: [bool; 9],
}

impl NeighborhoodExtract {
    pub fn max(&self) -> f64 {
        self.neighbors
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.neighbors.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Height differences from the centre to the window maximum and minimum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SlopeFactors {
    pub s_max: f64,
    pub s_min: f64,
}

/// Per-pixel [`SlopeFactors`]; zero on invalid pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFactorGrid {
    rows: usize,
    cols: usize,
    factors: Vec<SlopeFactors>,
    mask: ValidMask,
}

impl SlopeFactorGrid {
    pub fn new(
        rows: usize,
        cols: usize,
        factors: Vec<SlopeFactors>,
        mask: ValidMask,
    ) -> Result<Self> {
        if factors.len() != rows * cols {
            return Err(Error::ValueCount {
                expected: rows * cols,
                found: factors.len(),
            });
        }
        if mask.dims() != (rows, cols) {
            return Err(Error::dims((rows, cols), mask.dims()));
        }
        if factors.iter().any(|f| !(f.s_max >= 0.0 && f.s_min >= 0.0)) {
            return Err(Error::InvalidArgument(
                "slope factors must be non-negative".into(),
            ));
        }
        Ok(Self {
            rows,
            cols,
            factors,
            mask,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn factors(&self) -> &[SlopeFactors] {
        &self.factors
    }

    pub fn get(&self, idx: usize) -> SlopeFactors {
        self.factors[idx]
    }

    pub fn mask(&self) -> &ValidMask {
        &self.mask
    }
}

/// Window values around a valid pixel.
pub(crate) fn window(grid: &HeightGrid, row: usize, col: usize) -> ([f64; 9], [bool; 9]) {
    let center = grid.values()[grid.index(row, col)];
    let mut values = [center; 9];
    let mut flags = [false; 9];
    let last_row = grid.rows() as isize - 1;
    let last_col = grid.cols() as isize - 1;
    for dr in -1isize..=1 {
        for dc in -1isize..=1 {
            let k = ((dr + 1) * 3 + (dc + 1)) as usize;
            let r = row as isize + dr;
            let c = col as isize + dc;
            let inside = (0..=last_row).contains(&r) && (0..=last_col).contains(&c);
            let rr = r.clamp(0, last_row) as usize;
            let cc = c.clamp(0, last_col) as usize;
            match grid.get(rr, cc) {
                Some(v) => {
                    values[k] = v;
                    flags[k] = inside;
                }
                None => values[k] = center,
            }
        }
    }
    (values, flags)
}

pub fn extract_3x3(grid: &HeightGrid, row: usize, col: usize) -> Result<NeighborhoodExtract> {
    if row >= grid.rows() || col >= grid.cols() {
        return Err(Error::InvalidArgument(format!(
            "pixel ({row}, {col}) outside {}x{} grid",
            grid.rows(),
            grid.cols()
        )));
    }
    let center = grid.get(row, col).ok_or(Error::InvalidPixel { row, col })?;
    let (neighbors, valid_flags) = window(grid, row, col);
    Ok(NeighborhoodExtract {
        center,
        neighbors,
        valid_flags,
    })
}

/// `|max(window) - centre|`.
pub fn slope_value(window: &[f64; 9]) -> f64 {
    let max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (max - window[4]).abs()
}

/// Direction code for a window.
///
/// The centre wins any tie for the maximum (code 4); otherwise the first
/// maximum in row-major order is taken and its linear index `k` maps to
/// code `8 - k`.
pub fn direction_code(window: &[f64; 9]) -> u8 {
    let max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if window[4] >= max {
        return SlopeDirectionGrid::VERTICAL;
    }
    let k = window
        .iter()
        .position(|&v| v == max)
        .expect("window max present");
    8 - k as u8
}

pub fn slope_factors(extract: &NeighborhoodExtract) -> SlopeFactors {
    SlopeFactors {
        s_max: (extract.max() - extract.center).abs(),
        s_min: (extract.min() - extract.center).abs(),
    }
}

/// Slope magnitude per valid pixel; nodata propagates.
pub fn slope_map(grid: &HeightGrid) -> HeightGrid {
    let cols = grid.cols();
    grid.map_valid(|i, _| {
        let (w, _) = window(grid, i / cols, i % cols);
        slope_value(&w)
    })
    .expect("slope map keeps the input geometry")
}

pub fn slope_direction_map(grid: &HeightGrid) -> SlopeDirectionGrid {
    let cols = grid.cols();
    let codes = (0..grid.len())
        .map(|i| {
            if grid.is_valid(i) {
                direction_code(&window(grid, i / cols, i % cols).0)
            } else {
                SlopeDirectionGrid::VERTICAL
            }
        })
        .collect();
    SlopeDirectionGrid::new(grid.rows(), grid.cols(), codes, grid.mask())
        .expect("codes are produced in range")
}

pub fn slope_factor_map(grid: &HeightGrid) -> SlopeFactorGrid {
    let cols = grid.cols();
    let factors = (0..grid.len())
        .map(|i| {
            let Some(center) = grid.value(i) else {
                return SlopeFactors::default();
            };
            let (neighbors, valid_flags) = window(grid, i / cols, i % cols);
            slope_factors(&NeighborhoodExtract {
                center,
                neighbors,
                valid_flags,
            })
        })
        .collect();
    SlopeFactorGrid {
        rows: grid.rows(),
        cols: grid.cols(),
        factors,
        mask: grid.mask(),
    }
}
