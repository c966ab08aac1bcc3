//! Sigma clipping of deforestation ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdMode {
    /// Divide by `n`.
    #[default]
    Population,
    /// Divide by `n - 1`; a single value has zero spread.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Keep values exactly `k` sigma away.
    #[default]
    Inclusive,
    /// Drop values exactly `k` sigma away. With zero spread this drops everything.
    Exclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaStats {
    pub mean: f64,
    pub std: f64,
}

/// Mean and standard deviation; the deviation is exactly 0 when all values
/// are equal.
pub fn mean_std(values: &[f64], mode: StdMode) -> Result<SigmaStats> {
    if values.is_empty() {
        return Err(Error::Empty("sigma filter needs at least one ratio"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.iter().all(|&v| v == values[0]) {
        return Ok(SigmaStats { mean, std: 0.0 });
    }
    let squares: f64 = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
    let dof = match mode {
        StdMode::Population => n,
        StdMode::Sample => n - 1.0,
    };
    Ok(SigmaStats {
        mean,
        std: (squares / dof).sqrt(),
    })
}

/// Indices of the values within `k` standard deviations of the mean, in
/// input order.
pub fn sigma_filter(values: &[f64], k: f64, mode: StdMode, boundary: Boundary) -> Result<(Vec<usize>, SigmaStats)> {
    let stats = mean_std(values, mode)?;
    if stats.std == 0.0 && boundary == Boundary::Inclusive {
        return Ok(((0..values.len()).collect(), stats));
    }
    let limit = k * stats.std;
    let keep = |v: f64| {
        let dev = (v - stats.mean).abs();
        match boundary {
            Boundary::Inclusive => dev <= limit,
            Boundary::Exclusive => dev < limit,
        }
    };
    let retained = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| keep(v))
        .map(|(i, _)| i)
        .collect();
    Ok((retained, stats))
}

/// Result of the two filtering rounds; indices refer to the input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStageOutcome {
    pub retained: Vec<usize>,
    pub removed_stage1: Vec<usize>,
    pub removed_stage2: Vec<usize>,
    pub stage1: SigmaStats,
    pub stage2: SigmaStats,
}

/// Clips at `k1` sigma, then clips the survivors at `k2` sigma with the
/// statistics recomputed over the survivors.
pub fn two_stage(values: &[f64], k1: f64, k2: f64, mode: StdMode, boundary: Boundary) -> Result<TwoStageOutcome> {
    let (kept1, stage1) = sigma_filter(values, k1, mode, boundary)?;
    if kept1.is_empty() {
        return Err(Error::AllRejected { stage: 1 });
    }
    let survivors: Vec<f64> = kept1.iter().map(|&i| values[i]).collect();
    let (kept2, stage2) = sigma_filter(&survivors, k2, mode, boundary)?;
    if kept2.is_empty() {
        return Err(Error::AllRejected { stage: 2 });
    }
    let retained: Vec<usize> = kept2.iter().map(|&j| kept1[j]).collect();
    let removed_stage1 = (0..values.len()).filter(|i| !kept1.contains(i)).collect();
    let removed_stage2 = kept1.iter().copied().filter(|i| !retained.contains(i)).collect();
    Ok(TwoStageOutcome {
        retained,
        removed_stage1,
        removed_stage2,
        stage1,
        stage2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const POP: StdMode = StdMode::Population;
    const INC: Boundary = Boundary::Inclusive;

    #[test]
    fn equal_values_are_all_kept() {
        let (kept, stats) = sigma_filter(&[0.1; 7], 3.0, POP, INC).unwrap();
        assert_eq!(kept, (0..7).collect::<Vec<_>>());
        assert_eq!(stats.std, 0.0);
        let (kept, _) = sigma_filter(&[0.1; 7], 3.0, POP, Boundary::Exclusive).unwrap();
        assert!(kept.is_empty());
    }

    #[test]
    fn single_black_outlier_among_fifteen() {
        let mut ratios = vec![0.40; 14];
        ratios.push(0.0);
        let (kept, stats) = sigma_filter(&ratios, 3.0, POP, INC).unwrap();
        assert_eq!(kept, (0..14).collect::<Vec<_>>());
        // hand recomputation: mu = 5.6 / 15, sigma = sqrt(14 (0.4 - mu)^2 + mu^2) / sqrt(15)
        let mu: f64 = 5.6 / 15.0;
        let sigma = ((14.0 * (0.4 - mu).powi(2) + mu * mu) / 15.0).sqrt();
        assert!((stats.mean - 0.373_333).abs() < 1e-6);
        assert!((stats.std - sigma).abs() < 1e-12);
        assert!((stats.std - 0.099_778).abs() < 1e-6);
    }

    #[test]
    fn one_sigma_keeps_only_the_centre() {
        let (kept, stats) = sigma_filter(&[0.3, 0.4, 0.5], 1.0, POP, INC).unwrap();
        assert_eq!(kept, vec![1]);
        assert!((stats.std - 0.081_65).abs() < 1e-5);
    }

    #[test]
    fn sample_mode_widens_the_band() {
        // population sigma 0.204 rejects the ends, sample sigma 0.25 keeps them
        let values = [0.25, 0.5, 0.75];
        let (kept, _) = sigma_filter(&values, 1.0, POP, INC).unwrap();
        assert_eq!(kept, vec![1]);
        let (kept, stats) = sigma_filter(&values, 1.0, StdMode::Sample, INC).unwrap();
        assert_eq!(stats.std, 0.25);
        assert_eq!(kept.len(), 3);
        let (kept, stats) = sigma_filter(&[0.3], 1.0, StdMode::Sample, INC).unwrap();
        assert_eq!((kept, stats.std), (vec![0], 0.0));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(sigma_filter(&[], 3.0, POP, INC).is_err());
        assert!(two_stage(&[], 3.0, 1.0, POP, INC).is_err());
    }

    #[test]
    fn two_stage_recomputes_statistics() {
        let out = two_stage(&[0.5], 3.0, 1.0, POP, INC).unwrap();
        assert_eq!(out.retained, vec![0]);

        let out = two_stage(&[0.3, 0.4, 0.5], 3.0, 1.0, POP, INC).unwrap();
        assert!(out.removed_stage1.is_empty());
        assert_eq!(out.removed_stage2, vec![0, 2]);
        assert_eq!(out.retained, vec![1]);
    }

    #[test]
    fn exclusive_boundary_can_reject_everything() {
        assert!(matches!(
            two_stage(&[0.2, 0.2], 3.0, 1.0, POP, Boundary::Exclusive),
            Err(Error::AllRejected { stage: 1 })
        ));
    }
}
