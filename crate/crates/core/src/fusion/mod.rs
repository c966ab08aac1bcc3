//! Ensemble fusion of per-image predictions into one map per query.
//!
//! 1. Compute each prediction's deforestation ratio.
//! 2. Drop ratios outside `mean ± k1·σ`, then recompute and drop those
//!    outside `mean ± k2·σ`.
//! 3. Average the surviving probability masks pixel-wise and mark pixels
//!    above `pixel_threshold`.
//! 4. Remove speckle with a morphological opening.

mod morphology;
mod sigma;

use serde::{Deserialize, Serialize};

pub use morphology::{dilate, erode, erode_with_padding, open, Padding, StructuringElement};
pub use sigma::{mean_std, sigma_filter, two_stage, Boundary, SigmaStats, StdMode, TwoStageOutcome};

use crate::catalog::Query;
use crate::error::{Error, Result};
use crate::raster::{BinaryMask, ProbabilityMask};
use crate::segment::Prediction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    pub k1: f64,
    pub k2: f64,
    pub pixel_threshold: f64,
    pub ratio_binarize_level: f64,
    pub std_mode: StdMode,
    pub boundary: Boundary,
    pub structuring_element: StructuringElement,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            k1: 3.0,
            k2: 1.0,
            pixel_threshold: 0.40,
            ratio_binarize_level: 0.5,
            std_mode: StdMode::Population,
            boundary: Boundary::Inclusive,
            structuring_element: StructuringElement::default(),
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k2 > 0.0 && self.k1 >= self.k2 && self.k1.is_finite()) {
            return Err(Error::Config(format!(
                "fusion needs k1 >= k2 > 0, got k1={} k2={}",
                self.k1, self.k2
            )));
        }
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.pixel_threshold) {
            return Err(Error::Config(format!(
                "pixel_threshold {} must lie in (0, 1)",
                self.pixel_threshold
            )));
        }
        if !open_unit(self.ratio_binarize_level) {
            return Err(Error::Config(format!(
                "ratio_binarize_level {} must lie in (0, 1)",
                self.ratio_binarize_level
            )));
        }
        Ok(())
    }
}

/// Two-stage filtering on the predictions' ratios at the configured level.
pub fn two_stage_filter(predictions: &[Prediction], cfg: &FusionConfig) -> Result<TwoStageOutcome> {
    let ratios: Vec<f64> = predictions
        .iter()
        .map(|p| p.ratio_at(cfg.ratio_binarize_level))
        .collect();
    two_stage(&ratios, cfg.k1, cfg.k2, cfg.std_mode, cfg.boundary)
}

/// Pixel-wise mean, accumulated in the order given.
pub fn average_masks(masks: &[&ProbabilityMask]) -> Result<ProbabilityMask> {
    let first = masks.first().ok_or(Error::Empty("no masks to average"))?;
    let dims = first.dims();
    let mut sum = vec![0.0f64; first.values().len()];
    for mask in masks {
        if mask.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: mask.dims(),
            });
        }
        sum.iter_mut().zip(mask.values()).for_each(|(s, &v)| *s += v as f64);
    }
    let n = masks.len() as f64;
    let values = sum.into_iter().map(|s| ((s / n) as f32).clamp(0.0, 1.0)).collect();
    ProbabilityMask::new(dims.0, dims.1, values)
}

/// Marks pixels whose probability is strictly over `threshold`.
pub fn binarize(prob: &ProbabilityMask, threshold: f64) -> BinaryMask {
    let t = threshold as f32;
    let values = prob.values().iter().map(|&v| (v > t) as u8).collect();
    BinaryMask::new(prob.width(), prob.height(), values).expect("binary by construction")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub k: f64,
    pub mean: f64,
    pub std: f64,
    pub input: usize,
    pub removed: Vec<usize>,
}

/// Trace of one query's fusion. Indices refer to the order of `sources`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionReport {
    pub query: Query,
    pub candidates: usize,
    pub sources: Vec<String>,
    pub ratios: Vec<f64>,
    pub std_mode: StdMode,
    pub boundary: Boundary,
    pub stage1: StageReport,
    pub stage2: StageReport,
    pub retained: usize,
    pub pixel_threshold: f64,
    pub output: Option<String>,
}

/// Runs the whole post-processing chain for one query.
pub fn fuse_query(query: &Query, predictions: &[Prediction], cfg: &FusionConfig) -> Result<(BinaryMask, FusionReport)> {
    if predictions.is_empty() {
        return Err(Error::NoData {
            query: query.to_string(),
        });
    }
    if let Some(p) = predictions.iter().find(|p| p.month_key() != *query) {
        return Err(Error::MixedTiles {
            detail: format!("prediction {} does not belong to query {query}", p.source),
        });
    }
    let ratios: Vec<f64> = predictions
        .iter()
        .map(|p| p.ratio_at(cfg.ratio_binarize_level))
        .collect();
    let outcome = two_stage(&ratios, cfg.k1, cfg.k2, cfg.std_mode, cfg.boundary)?;

    let mut survivors: Vec<&Prediction> = outcome.retained.iter().map(|&i| &predictions[i]).collect();
    survivors.sort_by(|a, b| a.source.cmp(&b.source));
    let masks: Vec<&ProbabilityMask> = survivors.iter().map(|p| p.mask()).collect();
    let mean = average_masks(&masks)?;
    let fused = open(&binarize(&mean, cfg.pixel_threshold), &cfg.structuring_element);

    let n1 = predictions.len() - outcome.removed_stage1.len();
    let report = FusionReport {
        query: query.clone(),
        candidates: predictions.len(),
        sources: predictions.iter().map(|p| p.source.clone()).collect(),
        ratios,
        std_mode: cfg.std_mode,
        boundary: cfg.boundary,
        stage1: StageReport {
            k: cfg.k1,
            mean: outcome.stage1.mean,
            std: outcome.stage1.std,
            input: predictions.len(),
            removed: outcome.removed_stage1,
        },
        stage2: StageReport {
            k: cfg.k2,
            mean: outcome.stage2.mean,
            std: outcome.stage2.std,
            input: n1,
            removed: outcome.removed_stage2,
        },
        retained: outcome.retained.len(),
        pixel_threshold: cfg.pixel_threshold,
        output: None,
    };
    Ok((fused, report))
}
