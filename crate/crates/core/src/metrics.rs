//! Segmentation scores and training losses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, ProbabilityMask};

pub const BCE_EPSILON: f64 = 1e-7;
pub const DICE_SMOOTHING: f64 = 1.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, o: ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = ConfusionCounts>>(iter: I) -> Self {
        iter.fold(ConfusionCounts::default(), |a, b| a + b)
    }
}

fn check_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: b, actual: a });
    }
    Ok(())
}

/// Counts with class 1 (deforested) as the positive class.
pub fn confusion(pred: &BinaryMask, truth: &BinaryMask) -> Result<ConfusionCounts> {
    check_dims(pred.dims(), truth.dims())?;
    let mut table = [0u64; 4];
    for (&p, &t) in pred.values().iter().zip(truth.values()) {
        table[(p << 1 | t) as usize] += 1;
    }
    Ok(ConfusionCounts {
        tn: table[0],
        fn_: table[1],
        fp: table[2],
        tp: table[3],
    })
}

fn nonempty(c: &ConfusionCounts) -> Result<u64> {
    match c.total() {
        0 => Err(Error::Empty("metrics need at least one pixel")),
        n => Ok(n),
    }
}

pub fn pixel_accuracy(c: &ConfusionCounts) -> Result<f64> {
    let n = nonempty(c)?;
    Ok((c.tp + c.tn) as f64 / n as f64)
}

/// 1 when neither mask has a positive pixel.
pub fn f1(c: &ConfusionCounts) -> Result<f64> {
    nonempty(c)?;
    let den = 2 * c.tp + c.fp + c.fn_;
    Ok(if den == 0 { 1.0 } else { (2 * c.tp) as f64 / den as f64 })
}

/// 1 when neither mask has a positive pixel.
pub fn iou(c: &ConfusionCounts) -> Result<f64> {
    nonempty(c)?;
    let den = c.tp + c.fp + c.fn_;
    Ok(if den == 0 { 1.0 } else { c.tp as f64 / den as f64 })
}

pub fn bce_loss(p: &ProbabilityMask, y: &BinaryMask) -> Result<f64> {
    check_dims(p.dims(), y.dims())?;
    let n = p.values().len();
    if n == 0 {
        return Err(Error::Empty("loss needs at least one pixel"));
    }
    let sum: f64 = p
        .values()
        .iter()
        .zip(y.values())
        .map(|(&p, &y)| {
            let p = (p as f64).clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
            if y == 1 {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum();
    Ok(-sum / n as f64)
}

pub fn dice_loss(p: &ProbabilityMask, y: &BinaryMask) -> Result<f64> {
    dice_loss_smoothed(p, y, DICE_SMOOTHING)
}

pub fn dice_loss_smoothed(p: &ProbabilityMask, y: &BinaryMask, smoothing: f64) -> Result<f64> {
    check_dims(p.dims(), y.dims())?;
    let (mut inter, mut sp, mut sy) = (0.0f64, 0.0f64, 0.0f64);
    for (&p, &y) in p.values().iter().zip(y.values()) {
        let p = p as f64;
        let y = y as f64;
        inter += p * y;
        sp += p;
        sy += y;
    }
    Ok(1.0 - (2.0 * inter + smoothing) / (sp + sy + smoothing))
}

/// Unweighted BCE + Dice.
pub fn combined_loss(p: &ProbabilityMask, y: &BinaryMask) -> Result<f64> {
    Ok(bce_loss(p, y)? + dice_loss(p, y)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub pixel_accuracy: f64,
    pub f1: f64,
    pub iou: f64,
}

impl Scores {
    pub fn from_counts(c: &ConfusionCounts) -> Result<Scores> {
        Ok(Scores {
            pixel_accuracy: pixel_accuracy(c)?,
            f1: f1(c)?,
            iou: iou(c)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEval {
    pub query: String,
    #[serde(flatten)]
    pub counts: ConfusionCounts,
    pub accuracy: f64,
    pub f1: f64,
    pub iou: f64,
}

impl QueryEval {
    pub fn new(query: impl Into<String>, counts: ConfusionCounts) -> Result<Self> {
        let s = Scores::from_counts(&counts)?;
        Ok(QueryEval {
            query: query.into(),
            counts,
            accuracy: s.pixel_accuracy,
            f1: s.f1,
            iou: s.iou,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub pixel_accuracy: f64,
    pub f1: f64,
    pub iou: f64,
    #[serde(flatten)]
    pub counts: ConfusionCounts,
}

/// Per-query rows plus the micro aggregate (pooled counts) and the macro mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub queries: Vec<QueryEval>,
    pub aggregate: Aggregate,
    #[serde(rename = "macro")]
    pub macro_mean: Scores,
}

impl EvalReport {
    /// Rows are sorted by query name so the report does not depend on
    /// evaluation order.
    pub fn from_queries(mut queries: Vec<QueryEval>) -> Result<Self> {
        if queries.is_empty() {
            return Err(Error::Empty("nothing to evaluate"));
        }
        queries.sort_by(|a, b| a.query.cmp(&b.query));
        let pooled: ConfusionCounts = queries.iter().map(|q| q.counts).sum();
        let micro = Scores::from_counts(&pooled)?;
        let n = queries.len() as f64;
        let macro_mean = Scores {
            pixel_accuracy: queries.iter().map(|q| q.accuracy).sum::<f64>() / n,
            f1: queries.iter().map(|q| q.f1).sum::<f64>() / n,
            iou: queries.iter().map(|q| q.iou).sum::<f64>() / n,
        };
        Ok(EvalReport {
            queries,
            aggregate: Aggregate {
                pixel_accuracy: micro.pixel_accuracy,
                f1: micro.f1,
                iou: micro.iou,
                counts: pooled,
            },
            macro_mean,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask2(rows: [[u8; 2]; 2]) -> BinaryMask {
        BinaryMask::new(2, 2, rows.concat()).unwrap()
    }

    #[test]
    fn two_by_two_case() {
        let c = confusion(&mask2([[1, 0], [0, 0]]), &mask2([[1, 1], [0, 0]])).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 1,
                fp: 0,
                fn_: 1,
                tn: 2
            }
        );
        assert_eq!(pixel_accuracy(&c).unwrap(), 0.75);
        assert!((f1(&c).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(iou(&c).unwrap(), 0.5);
    }

    #[test]
    fn complement_has_no_agreement() {
        let t = BinaryMask::from_fn(8, 8, |x, y| (x * y) % 3 == 0);
        let c = confusion(&t.complement(), &t).unwrap();
        assert_eq!((c.tp, c.tn), (0, 0));
    }

    #[test]
    fn vacuous_agreement() {
        let z = BinaryMask::zeros(4, 4);
        let c = confusion(&z, &z).unwrap();
        assert_eq!((f1(&c).unwrap(), iou(&c).unwrap()), (1.0, 1.0));
        assert!(pixel_accuracy(&ConfusionCounts::default()).is_err());
    }

    #[test]
    fn losses_closed_forms() {
        let y = BinaryMask::from_fn(16, 16, |x, _| x < 5);
        let half = ProbabilityMask::filled(16, 16, 0.5).unwrap();
        assert!((bce_loss(&half, &y).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(combined_loss(&y.to_probability(), &y).unwrap() < 1e-5);
        let ones = BinaryMask::ones(16, 16);
        assert_eq!(dice_loss(&ones.to_probability(), &ones).unwrap(), 0.0);
        let zeros = ProbabilityMask::filled(16, 16, 0.0).unwrap();
        assert!((dice_loss(&zeros, &ones).unwrap() - (1.0 - 1.0 / 257.0)).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(confusion(&BinaryMask::zeros(2, 2), &BinaryMask::zeros(2, 3)).is_err());
        assert!(bce_loss(&ProbabilityMask::filled(2, 2, 0.1).unwrap(), &BinaryMask::zeros(3, 2)).is_err());
    }

    #[test]
    fn report_json_shape() {
        let c = ConfusionCounts {
            tp: 3,
            fp: 1,
            fn_: 0,
            tn: 4,
        };
        let report = EvalReport::from_queries(vec![QueryEval::new("b", c).unwrap(), QueryEval::new("a", c).unwrap()]).unwrap();
        assert_eq!(report.queries[0].query, "a");
        let v = serde_json::to_value(&report).unwrap();
        assert_eq!(v["queries"][0]["fn"], 0);
        assert_eq!(v["aggregate"]["tp"], 6);
        assert!(v["aggregate"]["iou"].as_f64().unwrap() == 0.75);
        assert!(v["macro"]["f1"].is_number());
    }
}
