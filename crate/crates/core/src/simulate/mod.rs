//! Three-stage coarse-to-fine refinement with an oracle matcher.
//!
//! Stage 1 sweeps evenly over a global height range. Later stages centre a
//! per-pixel range on the previous estimate, widen it to at least the stage's
//! sigma floor, and lay planes out either evenly or by slope. All stages share
//! the ground-truth resolution.

mod matcher;
mod terrain;

use std::fmt::Write as _;

pub use matcher::{noise_field, oracle_matcher};
pub use terrain::{generate_terrain, TerrainKind, TerrainSpec, HILL_COUNT};

use crate::correction::{correct, GaussianKernel};
use crate::error::{Error, Result};
use crate::loss::{loss_report, LossReport, StageWeights, STAGE_COUNT};
use crate::metrics::{evaluate, EvalReport, WHU_THRESHOLDS};
use crate::partition::{
    equal_partition, expected_height, pixel_range, pixel_std, slope_guided_partition,
    HypothesisPlanes, ProbabilityVolume, RangeGrid,
};
use crate::raster::{encode_ascii_grid, encode_pgm, HeightGrid, SlopeDirectionGrid};
use crate::slope::{slope_direction_map, slope_factor_map, slope_map};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageConfig {
    pub plane_count: usize,
    /// Lower bound on the half-width of the per-pixel range. Unused in stage 1.
    pub sigma_floor: f64,
    /// Ignored in stage 1, which always partitions the global range evenly.
    pub use_slope_partition: bool,
    pub use_height_correction: bool,
    pub correction_scale: f64,
    pub matcher_temperature: f64,
    pub matcher_noise: f64,
}

impl StageConfig {
    pub fn validate(&self) -> Result<()> {
        if self.plane_count < 2 {
            return Err(Error::InvalidArgument(format!(
                "plane count must be at least 2, got {}",
                self.plane_count
            )));
        }
        if !(self.matcher_temperature.is_finite() && self.matcher_temperature > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "matcher temperature must be positive, got {}",
                self.matcher_temperature
            )));
        }
        if !(self.matcher_noise.is_finite() && self.matcher_noise >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "matcher noise must be non-negative, got {}",
                self.matcher_noise
            )));
        }
        if !(self.sigma_floor.is_finite() && self.sigma_floor >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma floor must be non-negative, got {}",
                self.sigma_floor
            )));
        }
        if !self.correction_scale.is_finite() {
            return Err(Error::InvalidArgument(
                "correction scale must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Plane counts per stage.
pub const DEFAULT_PLANES: [usize; STAGE_COUNT] = [64, 32, 8];
/// Plane intervals (m) of stages 2 and 3; stage 1 divides the global range.
pub const DEFAULT_INTERVALS: [f64; 2] = [5.0, 2.5];

/// `[64, 32, 8]` planes, sigma floors `M·interval/2` (80 m and 10 m), both
/// modules enabled, τ = 2 m, matcher noise 3 m.
pub fn default_schedule() -> [StageConfig; STAGE_COUNT] {
    let floor = |s: usize| DEFAULT_PLANES[s] as f64 * DEFAULT_INTERVALS[s - 1] / 2.0;
    let base = StageConfig {
        plane_count: DEFAULT_PLANES[0],
        sigma_floor: 0.0,
        use_slope_partition: true,
        use_height_correction: true,
        correction_scale: 1.0,
        matcher_temperature: 2.0,
        matcher_noise: 3.0,
    };
    [
        base,
        StageConfig {
            plane_count: DEFAULT_PLANES[1],
            sigma_floor: floor(1),
            ..base
        },
        StageConfig {
            plane_count: DEFAULT_PLANES[2],
            sigma_floor: floor(2),
            ..base
        },
    ]
}

/// Copies of `stages` with both module switches overridden.
pub fn with_modules(
    stages: &[StageConfig; STAGE_COUNT],
    slope_partition: bool,
    height_correction: bool,
) -> [StageConfig; STAGE_COUNT] {
    stages.map(|s| StageConfig {
        use_slope_partition: slope_partition,
        use_height_correction: height_correction,
        ..s
    })
}

/// Everything one stage produced.
#[derive(Debug, Clone)]
pub struct StageOutput {
    pub planes: HypothesisPlanes,
    pub probabilities: ProbabilityVolume,
    pub height: HeightGrid,
    pub slope: HeightGrid,
    pub directions: SlopeDirectionGrid,
    pub report: EvalReport,
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub stages: Vec<StageOutput>,
    pub loss: LossReport,
}

impl SimulationResult {
    pub fn final_stage(&self) -> &StageOutput {
        self.stages.last().expect("three stages")
    }

    /// Per-stage metrics as CSV (`stage,mae,rmse,lt_2.5,lt_7.5,median,comp`).
    pub fn report_csv(&self) -> String {
        let mut out = String::from("stage");
        for (k, _) in self.stages[0].report.key_values() {
            out.push(',');
            out.push_str(&k);
        }
        out.push('\n');
        for (s, stage) in self.stages.iter().enumerate() {
            let _ = write!(out, "{}", s + 1);
            for (_, v) in stage.report.key_values() {
                let _ = write!(out, ",{v:.6}");
            }
            out.push('\n');
        }
        out
    }

    /// Per-stage and loss values as `key=value` lines.
    pub fn report_text(&self) -> String {
        let mut out = String::new();
        for (s, stage) in self.stages.iter().enumerate() {
            for (k, v) in stage.report.key_values() {
                let _ = writeln!(out, "stage{}_{k}={v:.6}", s + 1);
            }
        }
        let _ = writeln!(out, "height_loss={:.6}", self.loss.height_loss);
        let _ = writeln!(out, "direction_loss={:.6}", self.loss.direction_loss);
        let _ = writeln!(out, "overall_loss={:.6}", self.loss.overall);
        out
    }

    /// Encoded run-directory files: `stageN_{height,slope,dir}.{asc,pgm}`.
    ///
    /// Heights render over `height_range`, slopes over `[0, max slope]`,
    /// directions over `[0, 8]`.
    pub fn artifacts(&self, height_range: (f64, f64)) -> Result<Vec<(String, Vec<u8>)>> {
        let slope_hi = self
            .stages
            .iter()
            .filter_map(|s| s.slope.valid_range())
            .map(|(_, hi)| hi)
            .fold(0.0, f64::max)
            .max(1e-9);
        let mut files = Vec::new();
        for (s, stage) in self.stages.iter().enumerate() {
            let n = s + 1;
            let dirs = stage.directions.to_height_grid(stage.height.cell_size())?;
            for (name, grid, lo, hi) in [
                ("height", &stage.height, height_range.0, height_range.1),
                ("slope", &stage.slope, 0.0, slope_hi),
                ("dir", &dirs, 0.0, 8.0),
            ] {
                files.push((
                    format!("stage{n}_{name}.asc"),
                    encode_ascii_grid(grid).into_bytes(),
                ));
                files.push((format!("stage{n}_{name}.pgm"), encode_pgm(grid, lo, hi)?));
            }
        }
        Ok(files)
    }
}

/// Valid range of `gt` widened by `margin` meters on both sides.
pub fn padded_range(gt: &HeightGrid, margin: f64) -> Result<(f64, f64)> {
    let (lo, hi) = gt
        .valid_range()
        .ok_or_else(|| Error::EmptyJointMask(" in ground truth".into()))?;
    let margin = margin.max(0.0);
    let (lo, hi) = (lo - margin, hi + margin);
    Ok(if hi > lo {
        (lo, hi)
    } else {
        (lo - 1.0, hi + 1.0)
    })
}

/// Per-stage matcher seed; shared by every arm that uses the same base seed.
pub fn stage_seed(seed: u64, stage: usize) -> u64 {
    seed ^ (stage as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn run_pipeline(
    gt: &HeightGrid,
    global_range: (f64, f64),
    stages: &[StageConfig; STAGE_COUNT],
    seed: u64,
) -> Result<SimulationResult> {
    let (low, high) = global_range;
    if !(low.is_finite() && high.is_finite() && low < high) {
        return Err(Error::InvalidArgument(format!(
            "global range must satisfy low < high, got [{low}, {high}]"
        )));
    }
    for stage in stages {
        stage.validate()?;
    }
    let (gt_lo, gt_hi) = gt
        .valid_range()
        .ok_or_else(|| Error::EmptyJointMask(" in ground truth".into()))?;
    if gt_lo < low || gt_hi > high {
        return Err(Error::InvalidArgument(format!(
            "ground truth spans [{gt_lo}, {gt_hi}], outside global range [{low}, {high}]"
        )));
    }

    let mut outputs: Vec<StageOutput> = Vec::with_capacity(STAGE_COUNT);
    for (s, config) in stages.iter().enumerate() {
        let planes = match outputs.last() {
            None => {
                let ranges = RangeGrid::uniform(gt.mask(), gt.cell_size(), low, high)?;
                equal_partition(&ranges, config.plane_count)?
            }
            Some(prev) => {
                let sigma = pixel_std(&prev.planes, &prev.probabilities, &prev.height)?;
                let ranges = pixel_range(&prev.height, &sigma, config.sigma_floor)?;
                if config.use_slope_partition {
                    let factors = slope_factor_map(&prev.height);
                    slope_guided_partition(&prev.height, &ranges, &factors, config.plane_count)?
                } else {
                    equal_partition(&ranges, config.plane_count)?
                }
            }
        };
        let probabilities = oracle_matcher(
            &planes,
            gt,
            config.matcher_temperature,
            config.matcher_noise,
            stage_seed(seed, s),
        )?;
        let mut height = expected_height(&planes, &probabilities)?;
        if config.use_height_correction {
            height = correct(&height, &GaussianKernel::new(config.correction_scale)?);
        }
        let slope = slope_map(&height);
        let directions = slope_direction_map(&height);
        let report = evaluate(&height, gt, &WHU_THRESHOLDS)?;
        outputs.push(StageOutput {
            planes,
            probabilities,
            height,
            slope,
            directions,
            report,
        });
    }

    let pred: Vec<HeightGrid> = outputs.iter().map(|o| o.height.clone()).collect();
    let dirs: Vec<SlopeDirectionGrid> = outputs.iter().map(|o| o.directions.clone()).collect();
    let gt_stack = vec![gt.clone(); STAGE_COUNT];
    let pseudo_gt = vec![slope_direction_map(gt); STAGE_COUNT];
    let loss = loss_report(&pred, &gt_stack, &dirs, &pseudo_gt, StageWeights::default())?;
    Ok(SimulationResult {
        stages: outputs,
        loss,
    })
}

/// The four module combinations compared in the ablation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Baseline,
    SlopePartition,
    HeightCorrection,
    Full,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Baseline,
        Variant::SlopePartition,
        Variant::HeightCorrection,
        Variant::Full,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::SlopePartition => "baseline+sipm",
            Variant::HeightCorrection => "baseline+hcm",
            Variant::Full => "full",
        }
    }

    /// `(slope partition, height correction)`.
    pub fn modules(self) -> (bool, bool) {
        match self {
            Variant::Baseline => (false, false),
            Variant::SlopePartition => (true, false),
            Variant::HeightCorrection => (false, true),
            Variant::Full => (true, true),
        }
    }

    pub fn apply(self, stages: &[StageConfig; STAGE_COUNT]) -> [StageConfig; STAGE_COUNT] {
        let (slope, correction) = self.modules();
        with_modules(stages, slope, correction)
    }
}

/// Final-stage metrics averaged over seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationRow {
    pub variant: Variant,
    pub mae: f64,
    pub rmse: f64,
    pub pct_lt_2_5: f64,
    pub pct_lt_7_5: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn row(&self, variant: Variant) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant,mae,rmse,lt_2.5,lt_7.5,runs\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{:.6},{}",
                r.variant.label(),
                r.mae,
                r.rmse,
                r.pct_lt_2_5,
                r.pct_lt_7_5,
                r.runs
            );
        }
        out
    }
}

/// Runs every [`Variant`] once per seed on the same ground truth. Matcher
/// noise depends only on the seed, so arms see identical perturbations.
pub fn ablation_report(
    gt: &HeightGrid,
    global_range: (f64, f64),
    base_stages: &[StageConfig; STAGE_COUNT],
    seeds: &[u64],
) -> Result<AblationTable> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument(
            "ablation needs at least one seed".into(),
        ));
    }
    let mut rows = Vec::with_capacity(Variant::ALL.len());
    for variant in Variant::ALL {
        let stages = variant.apply(base_stages);
        let mut sums = [0.0; 4];
        for &seed in seeds {
            let result = run_pipeline(gt, global_range, &stages, seed)?;
            let r = &result.final_stage().report;
            sums[0] += r.mae;
            sums[1] += r.rmse;
            sums[2] += r.pct_below(2.5).unwrap_or(0.0);
            sums[3] += r.pct_below(7.5).unwrap_or(0.0);
        }
        let n = seeds.len() as f64;
        rows.push(AblationRow {
            variant,
            mae: sums[0] / n,
            rmse: sums[1] / n,
            pct_lt_2_5: sums[2] / n,
            pct_lt_7_5: sums[3] / n,
            runs: seeds.len(),
        });
    }
    Ok(AblationTable { rows })
}
