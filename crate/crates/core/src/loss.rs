//! Stage-weighted training criteria, evaluated (not differentiated) here.

use crate::error::{Error, Result};
use crate::raster::{HeightGrid, SlopeDirectionGrid};
use crate::sum::pairwise_sum;

pub const STAGE_COUNT: usize = 3;

/// Per-stage weights λ, all positive. Defaults to `(0.5, 1.0, 2.0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageWeights([f64; STAGE_COUNT]);

impl StageWeights {
    pub fn new(lambda: [f64; STAGE_COUNT]) -> Result<Self> {
        if lambda.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "stage weights must be positive, got {lambda:?}"
            )));
        }
        Ok(Self(lambda))
    }

    pub fn get(&self) -> [f64; STAGE_COUNT] {
        self.0
    }
}

impl Default for StageWeights {
    fn default() -> Self {
        Self([0.5, 1.0, 2.0])
    }
}

/// Per-pixel penalty on height residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeightPenalty {
    #[default]
    L1,
    /// Huber-style smooth L1 with a 1 m transition.
    SmoothL1,
}

impl HeightPenalty {
    fn apply(self, residual: f64) -> f64 {
        let a = residual.abs();
        match self {
            HeightPenalty::L1 => a,
            HeightPenalty::SmoothL1 if a < 1.0 => 0.5 * a * a,
            HeightPenalty::SmoothL1 => a - 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub height_loss: f64,
    pub direction_loss: f64,
    pub overall: f64,
    /// Unweighted (height, direction) means for each stage.
    pub per_stage: [(f64, f64); STAGE_COUNT],
}

fn check_stage_count(n: usize, what: &str) -> Result<()> {
    if n != STAGE_COUNT {
        return Err(Error::InvalidArgument(format!(
            "expected {STAGE_COUNT} {what} stages, got {n}"
        )));
    }
    Ok(())
}

fn mean(values: &[f64], stage: usize) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyJointMask(format!(" in stage {}", stage + 1)));
    }
    Ok(pairwise_sum(values) / values.len() as f64)
}

/// Mean penalty of `pred - gt` over jointly valid pixels of one stage.
pub fn stage_height_loss(
    pred: &HeightGrid,
    gt: &HeightGrid,
    penalty: HeightPenalty,
    stage: usize,
) -> Result<f64> {
    pred.check_dims(gt.dims())?;
    let residuals: Vec<f64> = (0..pred.len())
        .filter_map(|i| Some(penalty.apply(pred.value(i)? - gt.value(i)?)))
        .collect();
    mean(&residuals, stage)
}

/// Mean squared code difference over jointly valid pixels of one stage.
pub fn stage_direction_loss(
    pred: &SlopeDirectionGrid,
    pseudo_gt: &SlopeDirectionGrid,
    stage: usize,
) -> Result<f64> {
    if pred.dims() != pseudo_gt.dims() {
        return Err(Error::dims(pred.dims(), pseudo_gt.dims()));
    }
    let joint = pred.mask().and(pseudo_gt.mask())?;
    let squares: Vec<f64> = (0..pred.codes().len())
        .filter(|&i| joint.get(i))
        .map(|i| {
            let d = f64::from(pred.codes()[i]) - f64::from(pseudo_gt.codes()[i]);
            d * d
        })
        .collect();
    mean(&squares, stage)
}

/// `Σ_s λ_s · mean_x |Ĥ_s(x) - H_s(x)|`.
pub fn height_loss(pred: &[HeightGrid], gt: &[HeightGrid], weights: StageWeights) -> Result<f64> {
    height_loss_with(pred, gt, weights, HeightPenalty::L1)
}

pub fn height_loss_with(
    pred: &[HeightGrid],
    gt: &[HeightGrid],
    weights: StageWeights,
    penalty: HeightPenalty,
) -> Result<f64> {
    check_stage_count(pred.len(), "predicted")?;
    check_stage_count(gt.len(), "ground-truth")?;
    let mut total = 0.0;
    for (s, lambda) in weights.get().iter().enumerate() {
        total += lambda * stage_height_loss(&pred[s], &gt[s], penalty, s)?;
    }
    Ok(total)
}

/// `Σ_s λ_s · mean_x (ŜD_s(x) - SD_s(x))²`, codes taken as reals.
pub fn direction_loss(
    pred_dirs: &[SlopeDirectionGrid],
    pseudo_gt_dirs: &[SlopeDirectionGrid],
    weights: StageWeights,
) -> Result<f64> {
    check_stage_count(pred_dirs.len(), "predicted")?;
    check_stage_count(pseudo_gt_dirs.len(), "pseudo ground-truth")?;
    let mut total = 0.0;
    for (s, lambda) in weights.get().iter().enumerate() {
        total += lambda * stage_direction_loss(&pred_dirs[s], &pseudo_gt_dirs[s], s)?;
    }
    Ok(total)
}

pub const DEFAULT_HEIGHT_TERM_WEIGHT: f64 = 0.5;
pub const DEFAULT_DIRECTION_TERM_WEIGHT: f64 = 0.5;

pub fn overall_loss(h: f64, s: f64, l1: f64, l2: f64) -> f64 {
    l1 * h + l2 * s
}

/// Evaluates every term and combines them with the default 0.5/0.5 weights.
pub fn loss_report(
    pred: &[HeightGrid],
    gt: &[HeightGrid],
    pred_dirs: &[SlopeDirectionGrid],
    pseudo_gt_dirs: &[SlopeDirectionGrid],
    weights: StageWeights,
) -> Result<LossReport> {
    check_stage_count(pred.len(), "predicted")?;
    check_stage_count(gt.len(), "ground-truth")?;
    check_stage_count(pred_dirs.len(), "predicted")?;
    check_stage_count(pseudo_gt_dirs.len(), "pseudo ground-truth")?;
    let mut per_stage = [(0.0, 0.0); STAGE_COUNT];
    for (s, slot) in per_stage.iter_mut().enumerate() {
        *slot = (
            stage_height_loss(&pred[s], &gt[s], HeightPenalty::L1, s)?,
            stage_direction_loss(&pred_dirs[s], &pseudo_gt_dirs[s], s)?,
        );
    }
    let lambda = weights.get();
    let height_loss = (0..STAGE_COUNT).map(|s| lambda[s] * per_stage[s].0).sum();
    let direction_loss = (0..STAGE_COUNT).map(|s| lambda[s] * per_stage[s].1).sum();
    Ok(LossReport {
        height_loss,
        direction_loss,
        overall: overall_loss(
            height_loss,
            direction_loss,
            DEFAULT_HEIGHT_TERM_WEIGHT,
            DEFAULT_DIRECTION_TERM_WEIGHT,
        ),
        per_stage,
    })
}
