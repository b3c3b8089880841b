//! Reference implementations written directly from the definitions, kept
//! separate from the library code paths they check.
#![allow(dead_code)]

use terraslope_core::HeightGrid;

/// Explicit 3×3 window: clamp out-of-bounds indices, nodata → centre value.
pub fn brute_window(grid: &HeightGrid, row: usize, col: usize) -> [f64; 9] {
    let center = grid.get(row, col).expect("valid centre");
    let mut out = [0.0; 9];
    let offsets = [
        (-1, -1),
        (-1, 0),
        (-1, 1),
        (0, -1),
        (0, 0),
        (0, 1),
        (1, -1),
        (1, 0),
        (1, 1),
    ];
    for (slot, (dr, dc)) in offsets.iter().enumerate() {
        let mut r = row as i64 + dr;
        let mut c = col as i64 + dc;
        if r < 0 {
            r = 0;
        }
        if c < 0 {
            c = 0;
        }
        if r >= grid.rows() as i64 {
            r = grid.rows() as i64 - 1;
        }
        if c >= grid.cols() as i64 {
            c = grid.cols() as i64 - 1;
        }
        out[slot] = grid.get(r as usize, c as usize).unwrap_or(center);
    }
    out
}

pub fn brute_slope(grid: &HeightGrid, row: usize, col: usize) -> f64 {
    let w = brute_window(grid, row, col);
    let mut max = w[0];
    for v in w {
        if v > max {
            max = v;
        }
    }
    (max - w[4]).abs()
}

/// Direction via the listed code table:
/// lower right 0, down 1, lower left 2, right 3, vertical 4, left 5,
/// upper right 6, up 7, upper left 8.
pub fn brute_direction(grid: &HeightGrid, row: usize, col: usize) -> u8 {
    let w = brute_window(grid, row, col);
    let table: [(usize, u8); 9] = [
        (0, 8), // upper left
        (1, 7), // up
        (2, 6), // upper right
        (3, 5), // left
        (4, 4), // vertical
        (5, 3), // right
        (6, 2), // lower left
        (7, 1), // down
        (8, 0), // lower right
    ];
    let mut max = f64::NEG_INFINITY;
    for v in w {
        if v > max {
            max = v;
        }
    }
    if w[4] == max {
        return 4;
    }
    for (pos, code) in table {
        if w[pos] == max {
            return code;
        }
    }
    unreachable!()
}

/// Scalar transcription of the allocation and interval rules: shares
/// `M·S_min/(S_min+S_max)` (half-up, clamp ≥ 1 per side), the lower interval
/// `(H_min − H)/M_l2c` walked down from `H`, the upper interval walked up from
/// `H` with both endpoints included.
pub fn scalar_partition(
    h: f64,
    h_min: f64,
    h_max: f64,
    s_min: f64,
    s_max: f64,
    m: usize,
) -> Vec<f64> {
    let m_f = m as f64;
    let mut m_l2c = if s_min + s_max == 0.0 {
        (m / 2) as i64
    } else {
        let share = m_f * s_min / (s_min + s_max);
        (share + 0.5).floor() as i64
    };
    if m_l2c < 1 {
        m_l2c = 1;
    }
    if m_l2c > m as i64 - 1 {
        m_l2c = m as i64 - 1;
    }
    let m_c2u = m as i64 - m_l2c;

    let i_l2c = (h_min - h) / m_l2c as f64;
    let mut planes = Vec::new();
    for i in 1..=m_l2c {
        planes.push(h + i_l2c * i as f64);
    }
    if m_c2u == 1 {
        planes.push(h);
    } else {
        let i_c2u = (h_max - h) / (m_c2u - 1) as f64;
        for j in 0..m_c2u {
            planes.push(h + i_c2u * j as f64);
        }
    }
    planes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    planes
}

/// Nine explicit multiply-adds with the 1/16, 1/8, 1/4 pattern.
pub fn naive_correct(grid: &HeightGrid, scale: f64) -> Vec<Option<f64>> {
    let mut out = Vec::new();
    for r in 0..grid.rows() {
        for c in 0..grid.cols() {
            if grid.get(r, c).is_none() {
                out.push(None);
                continue;
            }
            let w = brute_window(grid, r, c);
            let v = scale / 16.0 * w[0]
                + scale / 8.0 * w[1]
                + scale / 16.0 * w[2]
                + scale / 8.0 * w[3]
                + scale / 4.0 * w[4]
                + scale / 8.0 * w[5]
                + scale / 16.0 * w[6]
                + scale / 8.0 * w[7]
                + scale / 16.0 * w[8];
            out.push(Some(v));
        }
    }
    out
}

/// Golden-section search for the minimiser of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    (lo + hi) / 2.0
}

pub struct MetricOracle {
    pub mae: f64,
    pub rmse: f64,
    pub pct: Vec<f64>,
    pub median: f64,
    pub comp: f64,
    pub count: usize,
}

/// Direct per-pixel loops over D ∩ D̃.
pub fn metric_oracle(est: &HeightGrid, gt: &HeightGrid, thresholds: &[f64]) -> MetricOracle {
    let mut abs = Vec::new();
    let mut est_valid = 0usize;
    for r in 0..est.rows() {
        for c in 0..est.cols() {
            if est.get(r, c).is_some() {
                est_valid += 1;
            }
            if let (Some(h), Some(t)) = (est.get(r, c), gt.get(r, c)) {
                abs.push((h - t).abs());
            }
        }
    }
    let n = abs.len() as f64;
    let mae = abs.iter().sum::<f64>() / n;
    let rmse = (abs.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let pct = thresholds
        .iter()
        .map(|t| 100.0 * abs.iter().filter(|e| **e < *t).count() as f64 / n)
        .collect();
    let mut sorted = abs.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = sorted.len();
    let median = if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    };
    MetricOracle {
        mae,
        rmse,
        pct,
        median,
        comp: 100.0 * est_valid as f64 / (est.rows() * est.cols()) as f64,
        count: abs.len(),
    }
}

/// Grid from values where `None` becomes the default sentinel.
pub fn grid_from(rows: usize, cols: usize, values: &[Option<f64>]) -> HeightGrid {
    HeightGrid::from_options(rows, cols, 1.0, -9999.0, values.iter().copied()).unwrap()
}
