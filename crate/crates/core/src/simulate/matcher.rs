//! Oracle stand-in for cost-volume matching.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::partition::{HypothesisPlanes, ProbabilityVolume};
use crate::raster::HeightGrid;

/// Zero-mean Gaussian perturbation per pixel, row-major, `noise` standard deviation.
///
/// One draw is made for every pixel regardless of validity so that the
/// realisation at a pixel depends only on `(seed, pixel index)`.
pub fn noise_field(len: usize, noise: f64, seed: u64) -> Result<Vec<f64>> {
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "matcher noise must be finite and non-negative, got {noise}"
        )));
    }
    if noise == 0.0 {
        return Ok(vec![0.0; len]);
    }
    let normal = Normal::new(0.0, noise).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..len).map(|_| normal.sample(&mut rng)).collect())
}

/// Softmax over negative plane-to-target distance:
/// `P_m ∝ exp(-|d_m - (gt + ε)| / τ)`.
pub fn oracle_matcher(
    planes: &HypothesisPlanes,
    gt: &HeightGrid,
    temperature: f64,
    noise: f64,
    seed: u64,
) -> Result<ProbabilityVolume> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "matcher temperature must be positive, got {temperature}"
        )));
    }
    gt.check_dims(planes.dims())?;
    let eps = noise_field(gt.len(), noise, seed)?;
    let mask = planes.mask().and(&gt.mask())?;
    let m = planes.plane_count();
    let mut probs = vec![1.0 / m as f64; gt.len() * m];
    let mut dist = vec![0.0; m];

    for (i, out) in probs.chunks_mut(m).enumerate() {
        if !mask.get(i) {
            continue;
        }
        let target = gt.values()[i] + eps[i];
        for (d, plane) in dist.iter_mut().zip(planes.pixel(i)) {
            *d = (plane - target).abs();
        }
        let nearest = dist.iter().copied().fold(f64::INFINITY, f64::min);
        let mut total = 0.0;
        for (p, d) in out.iter_mut().zip(&dist) {
            *p = (-(d - nearest) / temperature).exp();
            total += *p;
        }
        for p in out.iter_mut() {
            *p /= total;
        }
    }
    let (rows, cols) = gt.dims();
    ProbabilityVolume::new(rows, cols, m, probs, mask)
}
