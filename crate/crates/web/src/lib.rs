//! WebAssembly bindings for the interactive demo in `www/`.
//!
//! Three operations are exposed:
//!
//! - [`sigma_trace`]: two-stage sigma clipping of a list of ratios.
//! - [`FusionScene`]: a synthetic tile with a dozen noisy predictions (one of
//!   them all black) that can be fused with adjustable parameters.
//! - [`opening_view`]: a speckled mask before and after opening.
//!
//! Images are returned as RGBA bytes, 256×256, row-major.

use fg_core::catalog::Query;
use fg_core::fusion::{fuse_query, open, two_stage, Boundary, FusionConfig, StdMode, StructuringElement};
use fg_core::metrics::{confusion, Scores};
use fg_core::segment::Prediction;
use fg_core::synth::render_truth;
use fg_core::{BinaryMask, Date, GridCoord, ProbabilityMask, Satellite, TILE_SIZE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

const SIDE: usize = TILE_SIZE;

/// JSON trace of two-stage clipping: `{stage1: {mean, std, removed}, stage2:
/// {...}, retained}` or `{error}`.
#[wasm_bindgen]
pub fn sigma_trace(ratios: &[f64], k1: f64, k2: f64, sample_std: bool) -> String {
    let mode = if sample_std { StdMode::Sample } else { StdMode::Population };
    match two_stage(ratios, k1, k2, mode, Boundary::Inclusive) {
        Ok(out) => serde_json::json!({
            "stage1": {"mean": out.stage1.mean, "std": out.stage1.std, "removed": out.removed_stage1},
            "stage2": {"mean": out.stage2.mean, "std": out.stage2.std, "removed": out.removed_stage2},
            "retained": out.retained,
        })
        .to_string(),
        Err(e) => serde_json::json!({"error": e.to_string()}).to_string(),
    }
}

fn element(size: usize) -> StructuringElement {
    StructuringElement::square(size.max(1) | 1).expect("odd square")
}

fn rgba(mask_colour: impl Fn(usize) -> [u8; 3]) -> Vec<u8> {
    let mut out = Vec::with_capacity(SIDE * SIDE * 4);
    for i in 0..SIDE * SIDE {
        out.extend_from_slice(&mask_colour(i));
        out.push(255);
    }
    out
}

/// A noisy copy of `truth`: edges shifted by a few pixels, scattered
/// specks, and probabilities away from 0 and 1.
fn noisy_prediction(truth: &BinaryMask, rng: &mut ChaCha8Rng, speckle: f64) -> ProbabilityMask {
    let (dx, dy) = (rng.random_range(-3i32..=3), rng.random_range(-3i32..=3));
    let values = (0..SIDE * SIDE)
        .map(|i| {
            let (x, y) = ((i % SIDE) as i32 - dx, (i / SIDE) as i32 - dy);
            let inside = (0..SIDE as i32).contains(&x)
                && (0..SIDE as i32).contains(&y)
                && truth.get(x as usize, y as usize);
            let flip = rng.random_bool(speckle);
            if inside ^ flip {
                rng.random_range(0.6f32..0.95)
            } else {
                rng.random_range(0.0f32..0.3)
            }
        })
        .collect();
    ProbabilityMask::new(SIDE, SIDE, values).expect("probabilities in range")
}

#[wasm_bindgen]
pub struct FusionScene {
    truth: BinaryMask,
    predictions: Vec<Prediction>,
    fused: Option<BinaryMask>,
    report: String,
}

#[wasm_bindgen]
impl FusionScene {
    /// `count` noisy predictions plus one all-black one.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, count: usize, speckle: f64) -> FusionScene {
        let truth = render_truth(seed as u64, 1).remove(0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed as u64 ^ 0x5eed);
        let speckle = speckle.clamp(0.0, 0.5);
        let mut masks: Vec<ProbabilityMask> = (0..count.max(1))
            .map(|_| noisy_prediction(&truth, &mut rng, speckle))
            .collect();
        let slot = rng.random_range(0..=masks.len());
        masks.insert(slot, ProbabilityMask::filled(SIDE, SIDE, 0.0).expect("zero mask"));
        let predictions = masks
            .into_iter()
            .enumerate()
            .map(|(i, m)| {
                Prediction::new(
                    m,
                    Satellite::Sentinel2,
                    Date::new(2020, 8, 1 + i as u32 % 28).expect("valid day"),
                    GridCoord::longitude("-54.80").expect("valid lon"),
                    GridCoord::latitude("-3.67").expect("valid lat"),
                    format!("prediction {i:02}"),
                    0.5,
                )
            })
            .collect();
        FusionScene {
            truth,
            predictions,
            fused: None,
            report: String::new(),
        }
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.predictions.iter().map(|p| p.ratio()).collect()
    }

    /// Fuses with the given parameters; returns false and keeps the
    /// previous result if they are rejected.
    pub fn fuse(&mut self, k1: f64, k2: f64, threshold: f64, element_size: usize) -> bool {
        let cfg = FusionConfig {
            k1,
            k2,
            pixel_threshold: threshold,
            structuring_element: element(element_size),
            ..FusionConfig::default()
        };
        let query = Query::new("-54.80", "-3.67", 2020, 8).expect("valid query");
        match cfg.validate().and_then(|_| fuse_query(&query, &self.predictions, &cfg)) {
            Ok((mask, report)) => {
                self.fused = Some(mask);
                self.report = serde_json::to_string(&report).expect("report serializes");
                true
            }
            Err(e) => {
                self.report = serde_json::json!({"error": e.to_string()}).to_string();
                false
            }
        }
    }

    /// JSON fusion report of the last [`FusionScene::fuse`] call.
    pub fn report(&self) -> String {
        self.report.clone()
    }

    /// `[accuracy, f1, iou]` of the last fused map against the truth.
    pub fn scores(&self) -> Vec<f64> {
        self.fused
            .as_ref()
            .and_then(|f| confusion(f, &self.truth).ok())
            .and_then(|c| Scores::from_counts(&c).ok())
            .map_or_else(Vec::new, |s| vec![s.pixel_accuracy, s.f1, s.iou])
    }

    /// Prediction `index` as grayscale.
    pub fn prediction_image(&self, index: usize) -> Vec<u8> {
        let Some(p) = self.predictions.get(index) else {
            return Vec::new();
        };
        let v = p.mask().values();
        rgba(|i| [(v[i] * 255.0) as u8; 3])
    }

    /// Fused map against truth: white hit, red false alarm, blue miss.
    pub fn fused_image(&self) -> Vec<u8> {
        let empty = BinaryMask::zeros(SIDE, SIDE);
        let fused = self.fused.as_ref().unwrap_or(&empty);
        let (f, t) = (fused.values(), self.truth.values());
        rgba(|i| match (f[i], t[i]) {
            (1, 1) => [240, 240, 240],
            (1, 0) => [220, 50, 47],
            (0, 1) => [38, 139, 210],
            _ => [20, 24, 28],
        })
    }
}

/// A random mask with blobs and isolated specks: gray pixels survive an
/// opening with a `size`×`size` square, red ones are removed.
#[wasm_bindgen]
pub fn opening_view(seed: u32, speck_density: f64, size: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let blobs: Vec<(usize, usize, usize)> = (0..8)
        .map(|_| (rng.random_range(0..SIDE), rng.random_range(0..SIDE), rng.random_range(3..30)))
        .collect();
    let density = speck_density.clamp(0.0, 1.0);
    let mask = BinaryMask::from_fn(SIDE, SIDE, |x, y| {
        let in_blob = blobs.iter().any(|&(cx, cy, r)| {
            let (dx, dy) = (x.abs_diff(cx), y.abs_diff(cy));
            dx * dx + dy * dy <= r * r
        });
        in_blob || rng.random_bool(density)
    });
    let opened = open(&mask, &element(size));
    let (m, o) = (mask.values(), opened.values());
    rgba(|i| match (m[i], o[i]) {
        (1, 1) => [200, 200, 200],
        (1, 0) => [220, 50, 47],
        _ => [20, 24, 28],
    })
}
