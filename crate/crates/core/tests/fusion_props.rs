use fg_core::catalog::Query;
use fg_core::fusion::{
    average_masks, binarize, dilate, erode, erode_with_padding, fuse_query, open, sigma_filter, two_stage, Boundary,
    FusionConfig, Padding, StdMode, StructuringElement,
};
use fg_core::segment::Prediction;
use fg_core::{BinaryMask, Date, GridCoord, ProbabilityMask, Satellite};
use proptest::prelude::*;

fn mask_strategy(w: usize, h: usize) -> impl Strategy<Value = BinaryMask> {
    prop::collection::vec(0u8..=1, w * h).prop_map(move |v| BinaryMask::new(w, h, v).unwrap())
}

fn element_strategy() -> impl Strategy<Value = StructuringElement> {
    (0usize..3, 0usize..3)
        .prop_flat_map(|(a, b)| {
            let (w, h) = (2 * a + 1, 2 * b + 1);
            prop::collection::vec(0u8..=1, w * h).prop_map(move |mut cells| {
                cells[(h / 2) * w + w / 2] = 1;
                cells.chunks(w).map(|r| r.to_vec()).collect::<Vec<_>>()
            })
        })
        .prop_map(|rows| StructuringElement::new(rows).unwrap())
}

/// Neumaier-compensated mean of one pixel across masks.
fn compensated_mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp, mut n) = (0.0f64, 0.0f64, 0usize);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
        n += 1;
    }
    (sum + comp) / n as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn nothing_leaves_at_three_sigma_below_ten(values in prop::collection::vec(0.0f64..=1.0, 1..=9)) {
        let (kept, _) = sigma_filter(&values, 3.0, StdMode::Population, Boundary::Inclusive).unwrap();
        prop_assert_eq!(kept.len(), values.len());
    }

    #[test]
    fn two_stage_keeps_a_subset(values in prop::collection::vec(0.0f64..=1.0, 1..=30)) {
        let out = two_stage(&values, 3.0, 1.0, StdMode::Population, Boundary::Inclusive).unwrap();
        prop_assert!(!out.retained.is_empty());
        prop_assert_eq!(out.retained.len() + out.removed_stage1.len() + out.removed_stage2.len(), values.len());
        prop_assert!(out.retained.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn opening_is_idempotent_and_anti_extensive(img in mask_strategy(24, 20), se in element_strategy()) {
        let once = open(&img, &se);
        prop_assert!(once.is_subset_of(&img));
        prop_assert_eq!(open(&once, &se), once);
    }

    #[test]
    fn erosion_dilation_duality(img in mask_strategy(19, 23), se in element_strategy()) {
        let dual = erode_with_padding(&img.complement(), &se.reflected(), Padding::One).complement();
        prop_assert_eq!(dilate(&img, &se), dual);
        prop_assert!(erode(&img, &se).is_subset_of(&img));
        prop_assert!(img.is_subset_of(&dilate(&img, &se)));
    }

    #[test]
    fn binarize_is_monotone(values in prop::collection::vec(0.0f32..=1.0, 64), a in 0.01f64..0.99, b in 0.01f64..0.99) {
        let m = ProbabilityMask::new(8, 8, values).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(binarize(&m, hi).is_subset_of(&binarize(&m, lo)));
    }

    #[test]
    fn averaging_matches_compensated_oracle(
        masks in prop::collection::vec(prop::collection::vec(0.0f32..=1.0, 36), 1..12)
    ) {
        let masks: Vec<ProbabilityMask> = masks.into_iter().map(|v| ProbabilityMask::new(6, 6, v).unwrap()).collect();
        let refs: Vec<&ProbabilityMask> = masks.iter().collect();
        let avg = average_masks(&refs).unwrap();
        for i in 0..36 {
            let oracle = compensated_mean(masks.iter().map(|m| m.values()[i] as f64)) as f32;
            prop_assert!((avg.values()[i] - oracle).abs() <= f32::EPSILON);
        }
    }
}

fn tile_prediction(values: Vec<f32>, day: u32) -> Prediction {
    Prediction::new(
        ProbabilityMask::new(256, 256, values).unwrap(),
        Satellite::Landsat8,
        Date::new(2020, 8, day).unwrap(),
        GridCoord::longitude("-54.80").unwrap(),
        GridCoord::latitude("-3.67").unwrap(),
        format!("d{day:02}"),
        0.5,
    )
}

#[test]
fn fuse_is_the_composition_of_its_steps() {
    let mut predictions = Vec::new();
    for day in 1..=12u32 {
        let values = (0..65_536)
            .map(|i| {
                let (x, y) = (i % 256, i / 256);
                let inside = (40..140).contains(&x) && (60..120).contains(&y);
                let speck = (x * 31 + y * 17 + day as usize * 7).is_multiple_of(97);
                if inside ^ speck { 0.9 } else { 0.05 }
            })
            .collect();
        predictions.push(tile_prediction(values, day));
    }
    predictions.push(tile_prediction(vec![0.0; 65_536], 20));
    let cfg = FusionConfig::default();
    let query = Query::new("-54.80", "-3.67", 2020, 8).unwrap();
    let (fused, report) = fuse_query(&query, &predictions, &cfg).unwrap();
    assert_eq!(report.stage1.removed, vec![12]);

    let mut kept: Vec<&Prediction> = (0..predictions.len())
        .filter(|i| !report.stage1.removed.contains(i) && !report.stage2.removed.contains(i))
        .map(|i| &predictions[i])
        .collect();
    kept.sort_by(|a, b| a.source.cmp(&b.source));
    let refs: Vec<&ProbabilityMask> = kept.iter().map(|p| p.mask()).collect();
    let manual = open(&binarize(&average_masks(&refs).unwrap(), 0.4), &StructuringElement::default());
    assert_eq!(fused, manual);
    // the rectangle survives, isolated specks do not
    assert_eq!(fused.count_ones(), 100 * 60);
}

#[test]
fn fusion_is_independent_of_input_order() {
    let mut predictions: Vec<Prediction> = (1..=6u32)
        .map(|d| tile_prediction((0..65_536).map(|i| ((i * d as usize) % 11) as f32 / 10.0).collect(), d))
        .collect();
    let cfg = FusionConfig::default();
    let query = Query::new("-54.80", "-3.67", 2020, 8).unwrap();
    let (a, _) = fuse_query(&query, &predictions, &cfg).unwrap();
    predictions.reverse();
    let (b, _) = fuse_query(&query, &predictions, &cfg).unwrap();
    assert_eq!(a, b);
}
