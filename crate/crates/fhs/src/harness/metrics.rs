//! Fit and selection metrics: empirical L2 error, its gauge-aligned
//! variant for log-densities, and the per-replicate / aggregate report.

use crate::error::{FhsError, Result};

/// Mean squared difference over the sample points (the empirical L2
/// norm of the error, squared).
pub fn empirical_mse(fhat: &[f64], ftrue: &[f64]) -> Result<f64> {
    if fhat.len() != ftrue.len() {
        return Err(FhsError::DimensionMismatch(format!(
            "length mismatch {} vs {}",
            fhat.len(),
            ftrue.len()
        )));
    }
    if fhat.is_empty() {
        return Err(FhsError::Data("empty inputs".into()));
    }
    Ok(fhat
        .iter()
        .zip(ftrue.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / fhat.len() as f64)
}

/// Empirical MSE after subtracting each side's mean; log-densities are
/// identified only up to an additive constant.
pub fn gauge_aligned_mse(fhat: &[f64], ftrue: &[f64]) -> Result<f64> {
    if fhat.len() != ftrue.len() {
        return Err(FhsError::DimensionMismatch(format!(
            "length mismatch {} vs {}",
            fhat.len(),
            ftrue.len()
        )));
    }
    let ma = fhat.iter().sum::<f64>() / fhat.len() as f64;
    let mb = ftrue.iter().sum::<f64>() / ftrue.len() as f64;
    let a: Vec<f64> = fhat.iter().map(|v| v - ma).collect();
    let b: Vec<f64> = ftrue.iter().map(|v| v - mb).collect();
    empirical_mse(&a, &b)
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

pub fn sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::NAN;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Metrics for one replicate of an experiment; selection fields are
/// filled only by the additive and real-data workflows.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateMetrics {
    pub replicate: usize,
    pub mse_fhs_x100: f64,
    pub mse_baseline_x100: f64,
    pub omega_mean: f64,
    pub sigma2_mean: f64,
    pub mcc: Option<f64>,
    pub true_model_selected: Option<bool>,
    pub n_spurious_selected: Option<f64>,
    pub test_error: Option<f64>,
    pub failed: bool,
}

impl ReplicateMetrics {
    pub fn failed(replicate: usize) -> Self {
        Self {
            replicate,
            mse_fhs_x100: f64::NAN,
            mse_baseline_x100: f64::NAN,
            omega_mean: f64::NAN,
            sigma2_mean: f64::NAN,
            mcc: None,
            true_model_selected: None,
            n_spurious_selected: None,
            test_error: None,
            failed: true,
        }
    }
}

/// Aggregate over replicates; every aggregate is the plain mean (or
/// standard deviation) of the corresponding per-replicate column over
/// the non-failed replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub per_replicate: Vec<ReplicateMetrics>,
    pub mse_fhs_x100_mean: f64,
    pub mse_fhs_x100_sd: f64,
    pub mse_baseline_x100_mean: f64,
    pub mse_baseline_x100_sd: f64,
    pub omega_mean: f64,
    pub mcc_mean: Option<f64>,
    pub true_model_proportion: Option<f64>,
    pub spurious_mean: Option<f64>,
    pub test_error_mean: Option<f64>,
    pub test_error_sd: Option<f64>,
    pub modal_model: Option<String>,
    pub failures: usize,
}

impl MetricsReport {
    pub fn from_replicates(per_replicate: Vec<ReplicateMetrics>) -> Self {
        let ok: Vec<&ReplicateMetrics> = per_replicate.iter().filter(|r| !r.failed).collect();
        let failures = per_replicate.len() - ok.len();
        let col = |f: &dyn Fn(&ReplicateMetrics) -> f64| -> Vec<f64> {
            ok.iter().map(|r| f(r)).collect()
        };
        let fhs = col(&|r| r.mse_fhs_x100);
        let base = col(&|r| r.mse_baseline_x100);
        let omega = col(&|r| r.omega_mean);
        let mccs: Vec<f64> = ok.iter().filter_map(|r| r.mcc).collect();
        let true_sel: Vec<bool> = ok.iter().filter_map(|r| r.true_model_selected).collect();
        let spurious: Vec<f64> = ok.iter().filter_map(|r| r.n_spurious_selected).collect();
        let test_err: Vec<f64> = ok.iter().filter_map(|r| r.test_error).collect();
        Self {
            mse_fhs_x100_mean: mean(&fhs),
            mse_fhs_x100_sd: sd(&fhs),
            mse_baseline_x100_mean: mean(&base),
            mse_baseline_x100_sd: sd(&base),
            omega_mean: mean(&omega),
            mcc_mean: if mccs.is_empty() {
                None
            } else {
                Some(mean(&mccs))
            },
            true_model_proportion: if true_sel.is_empty() {
                None
            } else {
                Some(true_sel.iter().filter(|&&b| b).count() as f64 / true_sel.len() as f64)
            },
            spurious_mean: if spurious.is_empty() {
                None
            } else {
                Some(mean(&spurious))
            },
            test_error_mean: if test_err.is_empty() {
                None
            } else {
                Some(mean(&test_err))
            },
            test_error_sd: if test_err.len() < 2 {
                None
            } else {
                Some(sd(&test_err))
            },
            modal_model: None,
            failures,
            per_replicate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_inputs_give_zero() {
        let v = vec![1.0, -2.0, 3.5];
        assert_eq!(empirical_mse(&v, &v).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset_gives_square() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        let b: Vec<f64> = a.iter().map(|v| v + 0.7).collect();
        assert_relative_eq!(empirical_mse(&a, &b).unwrap(), 0.49, epsilon = 1e-14);
        // and zero after gauge alignment
        assert!(gauge_aligned_mse(&a, &b).unwrap() < 1e-28);
    }

    #[test]
    fn random_pair_matches_direct_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let mut acc = 0.0;
        for i in 0..100 {
            acc += (a[i] - b[i]) * (a[i] - b[i]);
        }
        assert_relative_eq!(empirical_mse(&a, &b).unwrap(), acc / 100.0, epsilon = 1e-14);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(empirical_mse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn aggregate_is_mean_of_replicates() {
        let reps: Vec<ReplicateMetrics> = (0..5)
            .map(|i| ReplicateMetrics {
                replicate: i,
                mse_fhs_x100: i as f64,
                mse_baseline_x100: 2.0 * i as f64,
                omega_mean: 0.5,
                sigma2_mean: 1.0,
                mcc: Some(1.0),
                true_model_selected: Some(i % 2 == 0),
                n_spurious_selected: Some(0.0),
                test_error: None,
                failed: false,
            })
            .collect();
        let report = MetricsReport::from_replicates(reps);
        assert_relative_eq!(report.mse_fhs_x100_mean, 2.0, epsilon = 1e-12);
        assert_relative_eq!(report.mse_baseline_x100_mean, 4.0, epsilon = 1e-12);
        assert_relative_eq!(report.true_model_proportion.unwrap(), 0.6, epsilon = 1e-12);
        assert_eq!(report.failures, 0);
    }

    #[test]
    fn failed_replicates_are_counted_and_excluded() {
        let mut reps: Vec<ReplicateMetrics> = (0..4)
            .map(|i| ReplicateMetrics {
                replicate: i,
                mse_fhs_x100: 1.0,
                mse_baseline_x100: 2.0,
                omega_mean: 0.5,
                sigma2_mean: 1.0,
                mcc: None,
                true_model_selected: None,
                n_spurious_selected: None,
                test_error: None,
                failed: false,
            })
            .collect();
        reps.push(ReplicateMetrics::failed(4));
        let report = MetricsReport::from_replicates(reps);
        assert_eq!(report.failures, 1);
        assert_relative_eq!(report.mse_fhs_x100_mean, 1.0, epsilon = 1e-12);
    }
}
