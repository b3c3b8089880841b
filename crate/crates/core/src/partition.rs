//! Per-pixel height ranges and hypothesis-plane layouts.
//!
//! A stage turns the previous stage's height estimate and probability volume
//! into a per-pixel range `[H - σ', H + σ']`, then lays out `M` candidate
//! heights inside it, either evenly ([`equal_partition`]) or split around the
//! current estimate in proportion to the local downhill/uphill slope factors
//! ([`slope_guided_partition`]).

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::raster::{HeightGrid, ValidMask};
use crate::slope::{SlopeFactorGrid, SlopeFactors};

/// Tolerance on per-pixel probability mass.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// Candidate heights per pixel, `plane_count` values each, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisPlanes {
    rows: usize,
    cols: usize,
    cell_size: f64,
    plane_count: usize,
    planes: Vec<f64>,
    mask: ValidMask,
}

impl HypothesisPlanes {
    pub fn new(
        rows: usize,
        cols: usize,
        cell_size: f64,
        plane_count: usize,
        planes: Vec<f64>,
        mask: ValidMask,
    ) -> Result<Self> {
        check_plane_count(plane_count)?;
        if planes.len() != rows * cols * plane_count {
            return Err(Error::ValueCount {
                expected: rows * cols * plane_count,
                found: planes.len(),
            });
        }
        if mask.dims() != (rows, cols) {
            return Err(Error::dims((rows, cols), mask.dims()));
        }
        for (idx, px) in planes.chunks(plane_count).enumerate() {
            if mask.get(idx)
                && px
                    .windows(2)
                    .any(|w| matches!(w[0].partial_cmp(&w[1]), None | Some(Ordering::Greater)))
            {
                return Err(Error::InvalidArgument(format!(
                    "planes at pixel {idx} are not sorted"
                )));
            }
        }
        Ok(Self {
            rows,
            cols,
            cell_size,
            plane_count,
            planes,
            mask,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn plane_count(&self) -> usize {
        self.plane_count
    }

    pub fn mask(&self) -> &ValidMask {
        &self.mask
    }

    pub fn pixel(&self, idx: usize) -> &[f64] {
        let m = self.plane_count;
        &self.planes[idx * m..(idx + 1) * m]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.planes
    }

    /// Largest gap between consecutive planes at one pixel.
    pub fn max_spacing(&self, idx: usize) -> f64 {
        self.pixel(idx)
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Largest per-pixel spacing over all valid pixels.
    pub fn max_spacing_overall(&self) -> f64 {
        (0..self.rows * self.cols)
            .filter(|&i| self.mask.get(i))
            .map(|i| self.max_spacing(i))
            .fold(0.0, f64::max)
    }

    /// One plane index across all pixels, as a grid.
    pub fn plane_grid(&self, plane: usize) -> Result<HeightGrid> {
        if plane >= self.plane_count {
            return Err(Error::InvalidArgument(format!(
                "plane {plane} out of range for {} planes",
                self.plane_count
            )));
        }
        HeightGrid::from_options(
            self.rows,
            self.cols,
            self.cell_size,
            crate::raster::DEFAULT_NODATA,
            (0..self.rows * self.cols).map(|i| self.mask.get(i).then(|| self.pixel(i)[plane])),
        )
    }
}

/// Per-pixel discrete distribution over the hypothesis planes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVolume {
    rows: usize,
    cols: usize,
    plane_count: usize,
    probs: Vec<f64>,
    mask: ValidMask,
}

impl ProbabilityVolume {
    pub fn new(
        rows: usize,
        cols: usize,
        plane_count: usize,
        probs: Vec<f64>,
        mask: ValidMask,
    ) -> Result<Self> {
        check_plane_count(plane_count)?;
        if probs.len() != rows * cols * plane_count {
            return Err(Error::ValueCount {
                expected: rows * cols * plane_count,
                found: probs.len(),
            });
        }
        if mask.dims() != (rows, cols) {
            return Err(Error::dims((rows, cols), mask.dims()));
        }
        for (idx, px) in probs.chunks(plane_count).enumerate() {
            if !mask.get(idx) {
                continue;
            }
            if px.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "negative or non-finite probability at pixel {idx}"
                )));
            }
            let total: f64 = px.iter().sum();
            if (total - 1.0).abs() > PROB_SUM_TOLERANCE {
                return Err(Error::InvalidArgument(format!(
                    "probabilities at pixel {idx} sum to {total}"
                )));
            }
        }
        Ok(Self {
            rows,
            cols,
            plane_count,
            probs,
            mask,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn plane_count(&self) -> usize {
        self.plane_count
    }

    pub fn mask(&self) -> &ValidMask {
        &self.mask
    }

    pub fn pixel(&self, idx: usize) -> &[f64] {
        let m = self.plane_count;
        &self.probs[idx * m..(idx + 1) * m]
    }
}

/// Height interval for one pixel. `sigma` is the half-width actually used.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PixelRange {
    pub h_min: f64,
    pub h_max: f64,
    pub sigma: f64,
}

impl PixelRange {
    pub fn centered(height: f64, sigma: f64) -> Self {
        Self {
            h_min: height - sigma,
            h_max: height + sigma,
            sigma,
        }
    }

    pub fn from_bounds(low: f64, high: f64) -> Self {
        Self {
            h_min: low,
            h_max: high,
            sigma: (high - low) / 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeGrid {
    rows: usize,
    cols: usize,
    cell_size: f64,
    ranges: Vec<PixelRange>,
    mask: ValidMask,
}

impl RangeGrid {
    pub fn new(
        rows: usize,
        cols: usize,
        cell_size: f64,
        ranges: Vec<PixelRange>,
        mask: ValidMask,
    ) -> Result<Self> {
        if ranges.len() != rows * cols {
            return Err(Error::ValueCount {
                expected: rows * cols,
                found: ranges.len(),
            });
        }
        if mask.dims() != (rows, cols) {
            return Err(Error::dims((rows, cols), mask.dims()));
        }
        for (idx, r) in ranges.iter().enumerate() {
            if mask.get(idx) && !(r.h_min <= r.h_max && r.sigma >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "range at pixel {idx} is inverted: [{}, {}]",
                    r.h_min, r.h_max
                )));
            }
        }
        Ok(Self {
            rows,
            cols,
            cell_size,
            ranges,
            mask,
        })
    }

    /// The same `[low, high]` range at every pixel set in `mask`.
    pub fn uniform(mask: ValidMask, cell_size: f64, low: f64, high: f64) -> Result<Self> {
        let (rows, cols) = mask.dims();
        Self::new(
            rows,
            cols,
            cell_size,
            vec![PixelRange::from_bounds(low, high); rows * cols],
            mask,
        )
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, idx: usize) -> PixelRange {
        self.ranges[idx]
    }

    pub fn ranges(&self) -> &[PixelRange] {
        &self.ranges
    }

    pub fn mask(&self) -> &ValidMask {
        &self.mask
    }
}

fn check_plane_count(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "plane count must be at least 2, got {m}"
        )));
    }
    Ok(())
}

fn check_volume(planes: &HypothesisPlanes, probs: &ProbabilityVolume) -> Result<()> {
    if planes.dims() != probs.dims() {
        return Err(Error::dims(planes.dims(), probs.dims()));
    }
    if planes.plane_count() != probs.plane_count() {
        return Err(Error::InvalidArgument(format!(
            "plane count mismatch: {} planes vs {} probabilities",
            planes.plane_count(),
            probs.plane_count()
        )));
    }
    Ok(())
}

/// `H(x) = Σ_m P_m(x) d_m(x)`.
pub fn expected_height(planes: &HypothesisPlanes, probs: &ProbabilityVolume) -> Result<HeightGrid> {
    check_volume(planes, probs)?;
    let (rows, cols) = planes.dims();
    let mask = planes.mask().and(probs.mask())?;
    HeightGrid::from_options(
        rows,
        cols,
        planes.cell_size(),
        crate::raster::DEFAULT_NODATA,
        (0..rows * cols).map(|i| {
            mask.get(i).then(|| {
                planes
                    .pixel(i)
                    .iter()
                    .zip(probs.pixel(i))
                    .map(|(d, p)| p * d)
                    .sum()
            })
        }),
    )
}

/// `σ(x) = sqrt(Σ_m P_m(x) (d_m(x) - H(x))²)`.
pub fn pixel_std(
    planes: &HypothesisPlanes,
    probs: &ProbabilityVolume,
    height: &HeightGrid,
) -> Result<HeightGrid> {
    check_volume(planes, probs)?;
    height.check_dims(planes.dims())?;
    let mask = planes.mask().and(probs.mask())?;
    let (rows, cols) = planes.dims();
    HeightGrid::from_options(
        rows,
        cols,
        height.cell_size(),
        height.nodata(),
        (0..rows * cols).map(|i| {
            let h = height.value(i).filter(|_| mask.get(i))?;
            let var: f64 = planes
                .pixel(i)
                .iter()
                .zip(probs.pixel(i))
                .map(|(d, p)| p * (d - h) * (d - h))
                .sum();
            Some(var.sqrt())
        }),
    )
}

/// `[H - σ', H + σ']` with `σ' = max(σ, sigma_floor)`.
pub fn pixel_range(height: &HeightGrid, sigma: &HeightGrid, sigma_floor: f64) -> Result<RangeGrid> {
    height.check_dims(sigma.dims())?;
    if !(sigma_floor.is_finite() && sigma_floor >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma floor must be finite and non-negative, got {sigma_floor}"
        )));
    }
    let mask = height.mask().and(&sigma.mask())?;
    let mut ranges = Vec::with_capacity(height.len());
    for i in 0..height.len() {
        if !mask.get(i) {
            ranges.push(PixelRange::default());
            continue;
        }
        let s = sigma.values()[i];
        if s < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "negative sigma {s} at pixel {i}"
            )));
        }
        ranges.push(PixelRange::centered(height.values()[i], s.max(sigma_floor)));
    }
    let (rows, cols) = height.dims();
    RangeGrid::new(rows, cols, height.cell_size(), ranges, mask)
}

/// Splits `m` planes into (below-centre, centre-and-above) counts.
///
/// The lower share is `m · s_min / (s_min + s_max)` rounded half-up; a flat
/// neighbourhood splits `floor(m / 2)` below. Each side keeps at least one.
pub fn split_counts(m: usize, factors: SlopeFactors) -> (usize, usize) {
    let total = factors.s_min + factors.s_max;
    let lower = if total > 0.0 {
        (m as f64 * factors.s_min / total + 0.5).floor() as usize
    } else {
        m / 2
    };
    let lower = lower.clamp(1, m - 1);
    (lower, m - lower)
}

/// Plane layout for one pixel.
///
/// `lower` samples run from `h_min` (inclusive) towards `height` (exclusive)
/// in equal steps; `upper` samples run from `height` to `h_max`, both
/// inclusive. A single upper sample sits at `height`.
pub fn slope_guided_planes(
    height: f64,
    range: PixelRange,
    factors: SlopeFactors,
    m: usize,
) -> Result<Vec<f64>> {
    check_plane_count(m)?;
    if !(range.h_min <= height && height <= range.h_max) {
        return Err(Error::InvalidArgument(format!(
            "height {height} outside its range [{}, {}]",
            range.h_min, range.h_max
        )));
    }
    let (lower, upper) = split_counts(m, factors);
    let mut planes = Vec::with_capacity(m);

    let down_step = (height - range.h_min) / lower as f64;
    planes.extend((0..lower).map(|k| range.h_min + k as f64 * down_step));

    if upper == 1 {
        planes.push(height);
    } else {
        let up_step = (range.h_max - height) / (upper - 1) as f64;
        planes.extend((0..upper - 1).map(|k| height + k as f64 * up_step));
        planes.push(range.h_max);
    }
    Ok(planes)
}

/// `m` evenly spaced planes over `[h_min, h_max]`, endpoints included.
pub fn equal_planes(range: PixelRange, m: usize) -> Result<Vec<f64>> {
    check_plane_count(m)?;
    let step = (range.h_max - range.h_min) / (m - 1) as f64;
    let mut planes: Vec<f64> = (0..m - 1).map(|k| range.h_min + k as f64 * step).collect();
    planes.push(range.h_max);
    Ok(planes)
}

pub fn slope_guided_partition(
    height: &HeightGrid,
    ranges: &RangeGrid,
    factors: &SlopeFactorGrid,
    m: usize,
) -> Result<HypothesisPlanes> {
    check_plane_count(m)?;
    height.check_dims(ranges.dims())?;
    height.check_dims(factors.dims())?;
    let mask = height.mask().and(ranges.mask())?.and(factors.mask())?;
    let mut planes = vec![0.0; height.len() * m];
    for (i, out) in planes.chunks_mut(m).enumerate() {
        if mask.get(i) {
            let px = slope_guided_planes(height.values()[i], ranges.get(i), factors.get(i), m)?;
            out.copy_from_slice(&px);
        }
    }
    let (rows, cols) = height.dims();
    HypothesisPlanes::new(rows, cols, height.cell_size(), m, planes, mask)
}

pub fn equal_partition(ranges: &RangeGrid, m: usize) -> Result<HypothesisPlanes> {
    check_plane_count(m)?;
    let (rows, cols) = ranges.dims();
    let mut planes = vec![0.0; rows * cols * m];
    for (i, out) in planes.chunks_mut(m).enumerate() {
        if ranges.mask().get(i) {
            out.copy_from_slice(&equal_planes(ranges.get(i), m)?);
        }
    }
    HypothesisPlanes::new(
        rows,
        cols,
        ranges.cell_size,
        m,
        planes,
        ranges.mask().clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(planes: &[f64], probs: &[f64]) -> (HypothesisPlanes, ProbabilityVolume) {
        let m = planes.len();
        let mask = ValidMask::all_valid(1, 1);
        (
            HypothesisPlanes::new(1, 1, 1.0, m, planes.to_vec(), mask.clone()).unwrap(),
            ProbabilityVolume::new(1, 1, m, probs.to_vec(), mask).unwrap(),
        )
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn expected_height_examples() {
        let (d, p) = single(&[1.0, 2.0, 7.0], &[0.0, 0.0, 1.0]);
        assert_eq!(expected_height(&d, &p).unwrap().values(), &[7.0]);
        let (d, p) = single(&[0.0, 10.0], &[0.5, 0.5]);
        assert_eq!(expected_height(&d, &p).unwrap().values(), &[5.0]);
        let (d, p) = single(&[100.0, 104.0], &[0.25, 0.75]);
        assert_eq!(expected_height(&d, &p).unwrap().values(), &[103.0]);
    }

    #[test]
    fn pixel_std_examples() {
        let (d, p) = single(&[1.0, 2.0, 7.0], &[0.0, 1.0, 0.0]);
        let h = expected_height(&d, &p).unwrap();
        assert_eq!(pixel_std(&d, &p, &h).unwrap().values(), &[0.0]);

        let (d, p) = single(&[0.0, 10.0], &[0.5, 0.5]);
        let h = HeightGrid::new(1, 1, 1.0, vec![5.0]).unwrap();
        assert_eq!(pixel_std(&d, &p, &h).unwrap().values(), &[5.0]);

        let (d, p) = single(&[100.0, 104.0], &[0.25, 0.75]);
        let h = HeightGrid::new(1, 1, 1.0, vec![103.0]).unwrap();
        assert!(close(
            pixel_std(&d, &p, &h).unwrap().values()[0],
            3f64.sqrt()
        ));
    }

    #[test]
    fn range_examples() {
        let h = HeightGrid::new(1, 1, 1.0, vec![100.0]).unwrap();
        let s = |v: f64| HeightGrid::new(1, 1, 1.0, vec![v]).unwrap();
        let r = pixel_range(&h, &s(5.0), 0.0).unwrap().get(0);
        assert_eq!((r.h_min, r.h_max), (95.0, 105.0));
        let r = pixel_range(&h, &s(0.0), 0.0).unwrap().get(0);
        assert_eq!((r.h_min, r.h_max), (100.0, 100.0));
        let r = pixel_range(&h, &s(2.0), 10.0).unwrap().get(0);
        assert_eq!((r.h_min, r.h_max, r.sigma), (90.0, 110.0, 10.0));
        assert!(pixel_range(&h, &s(-1.0), 0.0).is_err());
    }

    #[test]
    fn balanced_slopes_split_evenly() {
        let f = SlopeFactors {
            s_max: 2.0,
            s_min: 2.0,
        };
        let planes = slope_guided_planes(4.0, PixelRange::from_bounds(0.0, 8.0), f, 8).unwrap();
        let want = [
            0.0,
            1.0,
            2.0,
            3.0,
            4.0,
            4.0 + 4.0 / 3.0,
            4.0 + 8.0 / 3.0,
            8.0,
        ];
        assert_eq!(planes.len(), 8);
        for (a, b) in planes.iter().zip(want) {
            assert!(close(*a, b), "{planes:?}");
        }
    }

    #[test]
    fn one_sided_slope_clamps_to_one_below() {
        let f = SlopeFactors {
            s_max: 6.0,
            s_min: 0.0,
        };
        assert_eq!(split_counts(8, f), (1, 7));
        let planes = slope_guided_planes(4.0, PixelRange::from_bounds(0.0, 8.0), f, 8).unwrap();
        assert_eq!(planes.iter().filter(|&&p| p >= 4.0).count(), 7);
        assert_eq!(planes[0], 0.0);
        assert_eq!(planes[7], 8.0);
    }

    #[test]
    fn flat_pixel_uses_equal_split() {
        assert_eq!(split_counts(8, SlopeFactors::default()), (4, 4));
        assert_eq!(split_counts(7, SlopeFactors::default()), (3, 4));
        let planes = slope_guided_planes(
            4.0,
            PixelRange::from_bounds(0.0, 8.0),
            SlopeFactors::default(),
            8,
        )
        .unwrap();
        assert_eq!(&planes[..5], &[0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn single_upper_sample_sits_at_center() {
        let f = SlopeFactors {
            s_max: 0.0,
            s_min: 3.0,
        };
        let planes = slope_guided_planes(4.0, PixelRange::from_bounds(0.0, 8.0), f, 4).unwrap();
        assert_eq!(planes, vec![0.0, 4.0 / 3.0, 8.0 / 3.0, 4.0]);
    }

    #[test]
    fn equal_examples() {
        assert_eq!(
            equal_planes(PixelRange::from_bounds(0.0, 10.0), 3).unwrap(),
            vec![0.0, 5.0, 10.0]
        );
        assert_eq!(
            equal_planes(PixelRange::from_bounds(7.0, 7.0), 4).unwrap(),
            vec![7.0; 4]
        );
        assert_eq!(
            equal_planes(PixelRange::from_bounds(95.0, 105.0), 5).unwrap(),
            vec![95.0, 97.5, 100.0, 102.5, 105.0]
        );
    }

    #[test]
    fn plane_count_below_two_is_rejected() {
        assert!(equal_planes(PixelRange::from_bounds(0.0, 1.0), 1).is_err());
        assert!(slope_guided_planes(
            0.5,
            PixelRange::from_bounds(0.0, 1.0),
            SlopeFactors::default(),
            1
        )
        .is_err());
        let ranges = RangeGrid::uniform(ValidMask::all_valid(2, 2), 1.0, 0.0, 1.0).unwrap();
        assert!(equal_partition(&ranges, 0).is_err());
    }

    #[test]
    fn unnormalized_volume_is_rejected() {
        let mask = ValidMask::all_valid(1, 1);
        assert!(ProbabilityVolume::new(1, 1, 2, vec![0.5, 0.6], mask).is_err());
    }
}
