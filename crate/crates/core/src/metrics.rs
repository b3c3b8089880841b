//! DSM evaluation metrics.
//!
//! Error statistics are taken over pixels valid in both grids. Completeness
//! only looks at the estimate: valid estimate cells over all cells.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::raster::HeightGrid;
use crate::sum::pairwise_sum;

/// Threshold pair used for the WHU-TLC style report.
pub const WHU_THRESHOLDS: [f64; 2] = [2.5, 7.5];
pub const MVS3D_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mae: f64,
    pub rmse: f64,
    /// `(threshold, percentage of |error| < threshold)`, in request order.
    pub pct_below: Vec<(f64, f64)>,
    pub median_abs: f64,
    pub completeness: f64,
    pub joint_valid_count: usize,
}

impl EvalReport {
    pub fn pct_below(&self, threshold: f64) -> Option<f64> {
        self.pct_below
            .iter()
            .find(|(t, _)| *t == threshold)
            .map(|&(_, p)| p)
    }

    /// `(key, value)` pairs: `mae`, `rmse`, `lt_{t}` per threshold, `median`, `comp`.
    pub fn key_values(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("mae".to_string(), self.mae),
            ("rmse".to_string(), self.rmse),
        ];
        out.extend(self.pct_below.iter().map(|(t, p)| (format!("lt_{t}"), *p)));
        out.push(("median".to_string(), self.median_abs));
        out.push(("comp".to_string(), self.completeness));
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.key_values() {
            let _ = writeln!(out, "{k}={v:.6}");
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (k, v) in self.key_values() {
            let _ = writeln!(out, "{k},{v:.6}");
        }
        out
    }
}

/// The three-number MVS3D summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mvs3dReport {
    pub rmse: f64,
    pub pct_below_1m: f64,
    pub median_abs: f64,
    pub joint_valid_count: usize,
}

/// Absolute errors over jointly valid pixels, in row-major order.
pub fn joint_abs_errors(est: &HeightGrid, gt: &HeightGrid) -> Result<Vec<f64>> {
    est.check_dims(gt.dims())?;
    Ok((0..est.len())
        .filter_map(|i| Some((est.value(i)? - gt.value(i)?).abs()))
        .collect())
}

/// Median with the even-count midpoint convention. `values` must be non-empty.
pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

pub fn evaluate(est: &HeightGrid, gt: &HeightGrid, thresholds: &[f64]) -> Result<EvalReport> {
    if let Some(t) = thresholds.iter().find(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "threshold {t} is not finite"
        )));
    }
    let errors = joint_abs_errors(est, gt)?;
    if errors.is_empty() {
        return Err(Error::EmptyJointMask(
            " between estimate and ground truth".into(),
        ));
    }
    let n = errors.len() as f64;
    let squares: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let pct_below = thresholds
        .iter()
        .map(|&t| {
            let hits = errors.iter().filter(|&&e| e < t).count();
            (t, 100.0 * hits as f64 / n)
        })
        .collect();
    Ok(EvalReport {
        mae: pairwise_sum(&errors) / n,
        rmse: (pairwise_sum(&squares) / n).sqrt(),
        pct_below,
        median_abs: median(&errors),
        completeness: 100.0 * est.valid_count() as f64 / est.len() as f64,
        joint_valid_count: errors.len(),
    })
}

pub fn mvs3d_report(est: &HeightGrid, gt: &HeightGrid) -> Result<Mvs3dReport> {
    let r = evaluate(est, gt, &[MVS3D_THRESHOLD])?;
    Ok(Mvs3dReport {
        rmse: r.rmse,
        pct_below_1m: r.pct_below[0].1,
        median_abs: r.median_abs,
        joint_valid_count: r.joint_valid_count,
    })
}
