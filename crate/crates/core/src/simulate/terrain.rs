//! Deterministic synthetic terrain.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster::HeightGrid;

/// Number of bumps in a `gaussian-hills` terrain.
pub const HILL_COUNT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerrainKind {
    Ramp,
    Sinusoidal,
    GaussianHills,
    Fractal,
}

impl TerrainKind {
    pub const ALL: [TerrainKind; 4] = [
        TerrainKind::Ramp,
        TerrainKind::Sinusoidal,
        TerrainKind::GaussianHills,
        TerrainKind::Fractal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TerrainKind::Ramp => "ramp",
            TerrainKind::Sinusoidal => "sinusoidal",
            TerrainKind::GaussianHills => "gaussian-hills",
            TerrainKind::Fractal => "fractal",
        }
    }
}

impl fmt::Display for TerrainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TerrainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TerrainKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnsupportedTerrain(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerrainSpec {
    pub rows: usize,
    pub cols: usize,
    pub kind: TerrainKind,
    /// Height span in meters.
    pub amplitude: f64,
    /// Per-level displacement decay for `fractal`; controls frequency for
    /// `sinusoidal` and hill width for `gaussian-hills`.
    pub roughness: f64,
    pub seed: u64,
}

impl TerrainSpec {
    pub fn new(rows: usize, cols: usize, kind: TerrainKind, amplitude: f64, seed: u64) -> Self {
        Self {
            rows,
            cols,
            kind,
            amplitude,
            roughness: 0.5,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "terrain must be at least 1x1, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "terrain amplitude must be finite and non-negative, got {}",
                self.amplitude
            )));
        }
        if !(self.roughness.is_finite() && self.roughness >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "terrain roughness must be finite and non-negative, got {}",
                self.roughness
            )));
        }
        Ok(())
    }
}

pub fn generate_terrain(spec: &TerrainSpec) -> Result<HeightGrid> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (rows, cols, a) = (spec.rows, spec.cols, spec.amplitude);
    match spec.kind {
        TerrainKind::Ramp => {
            let denom = cols.saturating_sub(1).max(1) as f64;
            HeightGrid::from_fn(rows, cols, 1.0, |_, c| a * c as f64 / denom)
        }
        TerrainKind::Sinusoidal => {
            let cycles = 1.0 + 3.0 * spec.roughness;
            let phase_r = rng.random_range(0.0..std::f64::consts::TAU);
            let phase_c = rng.random_range(0.0..std::f64::consts::TAU);
            let tau = std::f64::consts::TAU;
            HeightGrid::from_fn(rows, cols, 1.0, |r, c| {
                let u = (tau * cycles * c as f64 / cols as f64 + phase_c).sin();
                let v = (tau * cycles * r as f64 / rows as f64 + phase_r).sin();
                0.5 * a * (1.0 + u * v)
            })
        }
        TerrainKind::GaussianHills => {
            let extent = rows.min(cols) as f64;
            let width = 1.0 / (1.0 + spec.roughness);
            let hills: Vec<(f64, f64, f64, f64)> = (0..HILL_COUNT)
                .map(|_| {
                    let cr = rng.random_range(0.0..rows as f64);
                    let cc = rng.random_range(0.0..cols as f64);
                    let sigma = (rng.random_range(0.1..0.3) * extent * width).max(1.0);
                    let peak = a * rng.random_range(0.5..=1.0);
                    (cr, cc, sigma, peak)
                })
                .collect();
            HeightGrid::from_fn(rows, cols, 1.0, |r, c| {
                hills
                    .iter()
                    .map(|&(cr, cc, sigma, peak)| {
                        let d2 = (r as f64 - cr).powi(2) + (c as f64 - cc).powi(2);
                        peak * (-d2 / (2.0 * sigma * sigma)).exp()
                    })
                    .sum()
            })
        }
        TerrainKind::Fractal => fractal(rows, cols, a, spec.roughness, &mut rng),
    }
}

/// Diamond-square midpoint displacement, cropped and rescaled to `[0, amplitude]`.
fn fractal(
    rows: usize,
    cols: usize,
    amplitude: f64,
    roughness: f64,
    rng: &mut ChaCha8Rng,
) -> Result<HeightGrid> {
    let mut size = 2;
    while size + 1 < rows.max(cols) {
        size *= 2;
    }
    let n = size + 1;
    let mut h = vec![0.0f64; n * n];
    let at = |r: usize, c: usize| r * n + c;
    for &(r, c) in &[(0, 0), (0, size), (size, 0), (size, size)] {
        h[at(r, c)] = rng.random_range(-1.0..=1.0);
    }

    let mut scale = 1.0;
    let mut step = size;
    while step > 1 {
        let half = step / 2;
        // Diamond: square centres.
        for r in (half..n).step_by(step) {
            for c in (half..n).step_by(step) {
                let avg = (h[at(r - half, c - half)]
                    + h[at(r - half, c + half)]
                    + h[at(r + half, c - half)]
                    + h[at(r + half, c + half)])
                    / 4.0;
                h[at(r, c)] = avg + rng.random_range(-scale..=scale);
            }
        }
        // Square: edge midpoints.
        for r in (0..n).step_by(half) {
            let start = if (r / half) % 2 == 0 { half } else { 0 };
            for c in (start..n).step_by(step) {
                let mut sum = 0.0;
                let mut count = 0.0;
                if r >= half {
                    sum += h[at(r - half, c)];
                    count += 1.0;
                }
                if r + half < n {
                    sum += h[at(r + half, c)];
                    count += 1.0;
                }
                if c >= half {
                    sum += h[at(r, c - half)];
                    count += 1.0;
                }
                if c + half < n {
                    sum += h[at(r, c + half)];
                    count += 1.0;
                }
                h[at(r, c)] = sum / count + rng.random_range(-scale..=scale);
            }
        }
        scale *= roughness;
        step = half;
    }

    let cropped: Vec<f64> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .map(|(r, c)| h[at(r, c)])
        .collect();
    let lo = cropped.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cropped.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let values = cropped
        .into_iter()
        .map(|v| {
            if span > 0.0 {
                amplitude * (v - lo) / span
            } else {
                0.0
            }
        })
        .collect();
    HeightGrid::new(rows, cols, 1.0, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_definition() {
        let g = generate_terrain(&TerrainSpec::new(3, 5, TerrainKind::Ramp, 8.0, 0)).unwrap();
        assert_eq!(g.get(2, 0), Some(0.0));
        assert_eq!(g.get(1, 2), Some(4.0));
        assert_eq!(g.get(0, 4), Some(8.0));
    }

    #[test]
    fn deterministic_for_seed() {
        for kind in TerrainKind::ALL {
            let spec = TerrainSpec::new(33, 20, kind, 100.0, 7);
            assert_eq!(
                generate_terrain(&spec).unwrap(),
                generate_terrain(&spec).unwrap()
            );
        }
        let a = generate_terrain(&TerrainSpec::new(17, 17, TerrainKind::Fractal, 10.0, 1)).unwrap();
        let b = generate_terrain(&TerrainSpec::new(17, 17, TerrainKind::Fractal, 10.0, 2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn hills_bounded_by_bump_sum() {
        let amp = 50.0;
        let g = generate_terrain(&TerrainSpec::new(
            40,
            40,
            TerrainKind::GaussianHills,
            amp,
            3,
        ))
        .unwrap();
        let (lo, hi) = g.valid_range().unwrap();
        assert!(lo >= 0.0);
        assert!(hi <= amp * HILL_COUNT as f64);
    }

    #[test]
    fn fractal_spans_amplitude() {
        let g =
            generate_terrain(&TerrainSpec::new(128, 128, TerrainKind::Fractal, 200.0, 0)).unwrap();
        let (lo, hi) = g.valid_range().unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - 200.0).abs() < 1e-9);
        let odd = generate_terrain(&TerrainSpec::new(5, 9, TerrainKind::Fractal, 1.0, 0)).unwrap();
        assert_eq!(odd.dims(), (5, 9));
    }

    #[test]
    fn unknown_kind() {
        assert!(matches!(
            "volcano".parse::<TerrainKind>(),
            Err(Error::UnsupportedTerrain(_))
        ));
        assert_eq!(
            "gaussian-hills".parse::<TerrainKind>().unwrap(),
            TerrainKind::GaussianHills
        );
    }
}
