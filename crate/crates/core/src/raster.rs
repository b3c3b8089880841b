//! Grid types, validity masks, ESRI ASCII-grid I/O and PGM rendering.
//!
//! Grids are row-major with the origin at the top-left pixel; row index grows
//! downward. A pixel is valid iff its stored value differs from the grid's
//! nodata sentinel.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Sentinel used when an ASCII grid header has no `NODATA_VALUE` line.
pub const DEFAULT_NODATA: f64 = -9999.0;

/// Significant digits used for grid values in ASCII output.
pub const ASCII_SIGNIFICANT_DIGITS: usize = 6;

/// Row-major raster of heights in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightGrid {
    rows: usize,
    cols: usize,
    cell_size: f64,
    nodata: f64,
    xll_corner: f64,
    yll_corner: f64,
    values: Vec<f64>,
}

impl HeightGrid {
    /// Builds a grid using [`DEFAULT_NODATA`] as the sentinel.
    pub fn new(rows: usize, cols: usize, cell_size: f64, values: Vec<f64>) -> Result<Self> {
        Self::with_nodata(rows, cols, cell_size, DEFAULT_NODATA, values)
    }

    pub fn with_nodata(
        rows: usize,
        cols: usize,
        cell_size: f64,
        nodata: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidGrid(format!(
                "dimensions must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "cell size must be finite and positive, got {cell_size}"
            )));
        }
        if !nodata.is_finite() {
            return Err(Error::InvalidGrid("nodata sentinel must be finite".into()));
        }
        if values.len() != rows * cols {
            return Err(Error::ValueCount {
                expected: rows * cols,
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "non-finite value at row {}, col {}",
                i / cols,
                i % cols
            )));
        }
        Ok(Self {
            rows,
            cols,
            cell_size,
            nodata,
            xll_corner: 0.0,
            yll_corner: 0.0,
            values,
        })
    }

    /// Builds a fully valid grid from a per-pixel function `f(row, col)`.
    pub fn from_fn(
        rows: usize,
        cols: usize,
        cell_size: f64,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                values.push(f(r, c));
            }
        }
        Self::new(rows, cols, cell_size, values)
    }

    /// Builds a grid from optional values; `None` becomes nodata.
    pub fn from_options(
        rows: usize,
        cols: usize,
        cell_size: f64,
        nodata: f64,
        values: impl IntoIterator<Item = Option<f64>>,
    ) -> Result<Self> {
        let values = values.into_iter().map(|v| v.unwrap_or(nodata)).collect();
        Self::with_nodata(rows, cols, cell_size, nodata, values)
    }

    pub fn with_origin(mut self, xll_corner: f64, yll_corner: f64) -> Self {
        self.xll_corner = xll_corner;
        self.yll_corner = yll_corner;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    pub fn origin(&self) -> (f64, f64) {
        (self.xll_corner, self.yll_corner)
    }

    /// Raw row-major storage, sentinels included.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn is_valid(&self, idx: usize) -> bool {
        self.values[idx] != self.nodata
    }

    pub fn is_valid_at(&self, row: usize, col: usize) -> bool {
        self.is_valid(self.index(row, col))
    }

    /// Value at a linear index, `None` when nodata.
    pub fn value(&self, idx: usize) -> Option<f64> {
        let v = self.values[idx];
        (v != self.nodata).then_some(v)
    }

    /// Value at `(row, col)`, `None` when nodata or out of bounds.
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        if row >= self.rows || col >= self.cols {
            return None;
        }
        self.value(self.index(row, col))
    }

    pub fn mask(&self) -> ValidMask {
        ValidMask {
            rows: self.rows,
            cols: self.cols,
            bits: self.values.iter().map(|&v| v != self.nodata).collect(),
        }
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|&&v| v != self.nodata).count()
    }

    /// Minimum and maximum over valid pixels.
    pub fn valid_range(&self) -> Option<(f64, f64)> {
        let mut it = (0..self.len()).filter_map(|i| self.value(i));
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }

    /// Applies `f(idx, value)` to every valid pixel; invalid pixels stay nodata.
    pub fn map_valid(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<HeightGrid> {
        let values = (0..self.len())
            .map(|i| match self.value(i) {
                Some(v) => f(i, v),
                None => self.nodata,
            })
            .collect();
        self.same_shape(values)
    }

    /// New grid with this grid's geometry, sentinel and origin.
    pub fn same_shape(&self, values: Vec<f64>) -> Result<HeightGrid> {
        Ok(
            Self::with_nodata(self.rows, self.cols, self.cell_size, self.nodata, values)?
                .with_origin(self.xll_corner, self.yll_corner),
        )
    }

    pub(crate) fn check_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() != other {
            return Err(Error::dims(self.dims(), other));
        }
        Ok(())
    }
}

/// Row-major validity bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidMask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl ValidMask {
    pub fn new(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(Error::ValueCount {
                expected: rows * cols,
                found: bits.len(),
            });
        }
        Ok(Self { rows, cols, bits })
    }

    pub fn all_valid(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            bits: vec![true; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Pixel-wise conjunction of two masks of equal shape.
    pub fn and(&self, other: &ValidMask) -> Result<ValidMask> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims()));
        }
        Ok(ValidMask {
            rows: self.rows,
            cols: self.cols,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a && b)
                .collect(),
        })
    }
}

/// Per-pixel slope-direction codes in `0..=8`.
///
/// Code layout over the 3×3 neighbourhood:
///
/// ```text
/// 8 7 6
/// 5 4 3
/// 2 1 0
/// ```
///
/// Code 4 means the centre pixel is the neighbourhood maximum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlopeDirectionGrid {
    rows: usize,
    cols: usize,
    codes: Vec<u8>,
    mask: ValidMask,
}

impl SlopeDirectionGrid {
    pub const MAX_CODE: u8 = 8;
    pub const VERTICAL: u8 = 4;

    pub fn new(rows: usize, cols: usize, codes: Vec<u8>, mask: ValidMask) -> Result<Self> {
        if codes.len() != rows * cols {
            return Err(Error::ValueCount {
                expected: rows * cols,
                found: codes.len(),
            });
        }
        if mask.dims() != (rows, cols) {
            return Err(Error::dims((rows, cols), mask.dims()));
        }
        if let Some(bad) = codes.iter().find(|&&c| c > Self::MAX_CODE) {
            return Err(Error::InvalidGrid(format!(
                "slope-direction code {bad} outside 0..=8"
            )));
        }
        Ok(Self {
            rows,
            cols,
            codes,
            mask,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn mask(&self) -> &ValidMask {
        &self.mask
    }

    pub fn code(&self, row: usize, col: usize) -> Option<u8> {
        let idx = row * self.cols + col;
        self.mask.get(idx).then(|| self.codes[idx])
    }

    /// Codes as a height grid (invalid pixels become [`DEFAULT_NODATA`]).
    pub fn to_height_grid(&self, cell_size: f64) -> Result<HeightGrid> {
        HeightGrid::from_options(
            self.rows,
            self.cols,
            cell_size,
            DEFAULT_NODATA,
            self.codes
                .iter()
                .zip(self.mask.bits())
                .map(|(&c, &ok)| ok.then_some(f64::from(c))),
        )
    }
}

// ---------------------------------------------------------------------------
// ESRI ASCII grid

#[derive(Default)]
struct Header {
    ncols: Option<usize>,
    nrows: Option<usize>,
    xll: Option<f64>,
    yll: Option<f64>,
    cell_size: Option<f64>,
    nodata: Option<f64>,
    xll_center: bool,
    yll_center: bool,
}

fn looks_numeric(token: &str) -> bool {
    token
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_digit() || matches!(c, '-' | '+' | '.'))
}

fn parse_header_value<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid value `{raw}` for {key}"),
    })
}

/// Parses ESRI ASCII-grid text.
pub fn parse_ascii_grid(text: &str) -> Result<HeightGrid> {
    let mut header = Header::default();
    let mut values = Vec::new();
    let mut in_body = false;
    let mut body_line = 0;

    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let first = tokens.next().unwrap_or_default();

        if !in_body && !looks_numeric(first) {
            let value = tokens.next().ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("header keyword `{first}` has no value"),
            })?;
            if tokens.next().is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("header keyword `{first}` has trailing tokens"),
                });
            }
            let key = first.to_ascii_lowercase();
            match key.as_str() {
                "ncols" => header.ncols = Some(parse_header_value(line_no, first, value)?),
                "nrows" => header.nrows = Some(parse_header_value(line_no, first, value)?),
                "xllcorner" => header.xll = Some(parse_header_value(line_no, first, value)?),
                "yllcorner" => header.yll = Some(parse_header_value(line_no, first, value)?),
                "xllcenter" => {
                    header.xll = Some(parse_header_value(line_no, first, value)?);
                    header.xll_center = true;
                }
                "yllcenter" => {
                    header.yll = Some(parse_header_value(line_no, first, value)?);
                    header.yll_center = true;
                }
                "cellsize" => header.cell_size = Some(parse_header_value(line_no, first, value)?),
                "nodata_value" => header.nodata = Some(parse_header_value(line_no, first, value)?),
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("unknown header keyword `{first}`"),
                    })
                }
            }
            continue;
        }

        if !in_body {
            in_body = true;
            body_line = line_no;
        }
        for token in std::iter::once(first).chain(tokens) {
            let v: f64 = token.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("non-numeric token `{token}`"),
            })?;
            values.push(v);
        }
    }

    let missing = |key: &str| Error::Parse {
        line: body_line,
        message: format!("missing header keyword {key}"),
    };
    let ncols = header.ncols.ok_or_else(|| missing("NCOLS"))?;
    let nrows = header.nrows.ok_or_else(|| missing("NROWS"))?;
    let cell_size = header.cell_size.ok_or_else(|| missing("CELLSIZE"))?;
    let nodata = header.nodata.unwrap_or(DEFAULT_NODATA);

    if values.len() != nrows * ncols {
        return Err(Error::ValueCount {
            expected: nrows * ncols,
            found: values.len(),
        });
    }
    let mut xll = header.xll.unwrap_or(0.0);
    let mut yll = header.yll.unwrap_or(0.0);
    if header.xll_center {
        xll -= cell_size / 2.0;
    }
    if header.yll_center {
        yll -= cell_size / 2.0;
    }
    Ok(HeightGrid::with_nodata(nrows, ncols, cell_size, nodata, values)?.with_origin(xll, yll))
}

pub fn read_ascii_grid(path: impl AsRef<Path>) -> Result<HeightGrid> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ascii_grid(&text)
}

/// Formats `v` with six significant digits, `%g` style.
pub fn format_significant(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let digits = ASCII_SIGNIFICANT_DIGITS - 1;
    let sci = format!("{:.*e}", digits, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= ASCII_SIGNIFICANT_DIGITS as i32 {
        format!("{}e{}", strip_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - exp) as usize;
        strip_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Serializes a grid to ESRI ASCII-grid text.
pub fn encode_ascii_grid(grid: &HeightGrid) -> String {
    let nodata_token = format!("{}", grid.nodata);
    let mut out = String::with_capacity(grid.len() * 8 + 128);
    let (xll, yll) = grid.origin();
    let _ = writeln!(out, "NCOLS {}", grid.cols);
    let _ = writeln!(out, "NROWS {}", grid.rows);
    let _ = writeln!(out, "XLLCORNER {xll}");
    let _ = writeln!(out, "YLLCORNER {yll}");
    let _ = writeln!(out, "CELLSIZE {}", grid.cell_size);
    let _ = writeln!(out, "NODATA_VALUE {nodata_token}");
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            if c > 0 {
                out.push(' ');
            }
            match grid.get(r, c) {
                None => out.push_str(&nodata_token),
                Some(v) => {
                    let token = format_significant(v);
                    // Rounding must never turn a valid value into the sentinel.
                    if token.parse::<f64>().ok() == Some(grid.nodata) {
                        let _ = write!(out, "{v}");
                    } else {
                        out.push_str(&token);
                    }
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_ascii_grid(grid: &HeightGrid, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, encode_ascii_grid(grid).as_bytes())
}

// ---------------------------------------------------------------------------
// PGM

/// Maps a value into `0..=255` as `floor(255 * clamp((v - lo) / (hi - lo), 0, 1))`.
pub fn gray_level(v: f64, lo: f64, hi: f64) -> u8 {
    let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
    (255.0 * t).floor() as u8
}

/// Encodes a binary (P5) 8-bit PGM. Invalid pixels are written as 0.
pub fn encode_pgm(grid: &HeightGrid, lo: f64, hi: f64) -> Result<Vec<u8>> {
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::InvalidArgument(format!(
            "render range requires finite lo < hi, got lo={lo}, hi={hi}"
        )));
    }
    let mut out = format!("P5\n{} {}\n255\n", grid.cols, grid.rows).into_bytes();
    out.extend((0..grid.len()).map(|i| grid.value(i).map_or(0, |v| gray_level(v, lo, hi))));
    Ok(out)
}

pub fn render_pgm(grid: &HeightGrid, path: impl AsRef<Path>, lo: f64, hi: f64) -> Result<()> {
    let bytes = encode_pgm(grid, lo, hi)?;
    write_atomic(path, &bytes)
}

/// Writes through a temporary file in the target directory, then renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
