use fg_core::metrics::{bce_loss, combined_loss, confusion, dice_loss, f1, iou, pixel_accuracy, ConfusionCounts};
use fg_core::{BinaryMask, ProbabilityMask};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pair(n: usize) -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
    (prop::collection::vec(0u8..=1, n), prop::collection::vec(0u8..=1, n))
        .prop_map(move |(a, b)| (BinaryMask::new(n, 1, a).unwrap(), BinaryMask::new(n, 1, b).unwrap()))
}

proptest! {
    #[test]
    fn scores_are_bounded_and_ordered((p, t) in pair(50)) {
        let c = confusion(&p, &t).unwrap();
        prop_assert_eq!(c.total(), 50);
        let (a, f, i) = (pixel_accuracy(&c).unwrap(), f1(&c).unwrap(), iou(&c).unwrap());
        for v in [a, f, i] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(i <= f);
        if c.tp + c.fp + c.fn_ > 0 {
            prop_assert!((f - 2.0 * i / (1.0 + i)).abs() < 1e-12);
        }
    }

    #[test]
    fn true_negatives_leave_f1_and_iou_alone((p, t) in pair(40), extra in 1u64..1000) {
        let c = confusion(&p, &t).unwrap();
        let padded = ConfusionCounts { tn: c.tn + extra, ..c };
        prop_assert_eq!(f1(&c).unwrap(), f1(&padded).unwrap());
        prop_assert_eq!(iou(&c).unwrap(), iou(&padded).unwrap());
    }

    #[test]
    fn pooled_counts_equal_concatenated_masks((p1, t1) in pair(30), (p2, t2) in pair(30)) {
        let pooled = confusion(&p1, &t1).unwrap() + confusion(&p2, &t2).unwrap();
        let cat = |a: &BinaryMask, b: &BinaryMask| {
            BinaryMask::new(60, 1, [a.values(), b.values()].concat()).unwrap()
        };
        prop_assert_eq!(pooled, confusion(&cat(&p1, &p2), &cat(&t1, &t2)).unwrap());
    }

    #[test]
    fn combined_loss_is_non_negative(p in prop::collection::vec(0.0f32..=1.0, 25), y in prop::collection::vec(0u8..=1, 25)) {
        let p = ProbabilityMask::new(5, 5, p).unwrap();
        let y = BinaryMask::new(5, 5, y).unwrap();
        prop_assert!(combined_loss(&p, &y).unwrap() >= 0.0);
    }
}

/// Pairwise summation of the elementwise terms.
fn pairwise(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise(a) + pairwise(b)
}

#[test]
fn losses_match_an_independent_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let n = 64 * 64;
        let p: Vec<f32> = (0..n).map(|_| rng.random()).collect();
        let y: Vec<u8> = (0..n).map(|_| rng.random_bool(0.3) as u8).collect();
        let terms: Vec<f64> = p
            .iter()
            .zip(&y)
            .map(|(&p, &y)| {
                let q = (p as f64).clamp(1e-7, 1.0 - 1e-7);
                -(y as f64 * q.ln() + (1.0 - y as f64) * (1.0 - q).ln())
            })
            .collect();
        let bce = pairwise(&terms) / n as f64;
        let inter = pairwise(&p.iter().zip(&y).map(|(&p, &y)| p as f64 * y as f64).collect::<Vec<_>>());
        let sp = pairwise(&p.iter().map(|&p| p as f64).collect::<Vec<_>>());
        let sy = y.iter().map(|&y| y as f64).sum::<f64>();
        let dice = 1.0 - (2.0 * inter + 1.0) / (sp + sy + 1.0);

        let pm = ProbabilityMask::new(64, 64, p).unwrap();
        let ym = BinaryMask::new(64, 64, y).unwrap();
        assert!((bce_loss(&pm, &ym).unwrap() - bce).abs() < 1e-9);
        assert!((dice_loss(&pm, &ym).unwrap() - dice).abs() < 1e-9);
    }
}

#[test]
fn exact_predictions_have_negligible_loss() {
    let y = BinaryMask::from_fn(32, 32, |x, y| x > y);
    let loss = combined_loss(&y.to_probability(), &y).unwrap();
    assert!(loss < 1e-5, "{loss}");
    let half = ProbabilityMask::filled(32, 32, 0.5).unwrap();
    assert!((bce_loss(&half, &y).unwrap() - 2f64.ln()).abs() < 1e-12);
}
