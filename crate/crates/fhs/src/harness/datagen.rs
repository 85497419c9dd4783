//! Seeded data generators for the simulation protocols: univariate
//! regression with covariates uniform on (-pi, pi) and the true function
//! standardized to a target signal-to-noise ratio, the three density
//! truths, and the three additive-model settings.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use std::f64::consts::PI;

use crate::error::{FhsError, Result};

/// True regression functions before standardization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressionTruth {
    Linear,
    Quadratic,
    Sine,
    Constant,
}

impl RegressionTruth {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "linear" => Ok(Self::Linear),
            "quadratic" => Ok(Self::Quadratic),
            "sine" => Ok(Self::Sine),
            "constant" => Ok(Self::Constant),
            other => Err(FhsError::InvalidConfig(format!(
                "unknown regression truth '{other}'"
            ))),
        }
    }

    pub fn raw(&self, x: f64) -> f64 {
        match self {
            Self::Linear => x,
            Self::Quadratic => x * x,
            Self::Sine => x.sin(),
            Self::Constant => 1.0,
        }
    }

    /// Var f(X) for X ~ U(-pi, pi), closed form.
    pub fn variance_uniform_pi(&self) -> f64 {
        match self {
            Self::Linear => PI * PI / 3.0,
            // Var(X^2) = E X^4 - (E X^2)^2 = pi^4/5 - pi^4/9
            Self::Quadratic => PI.powi(4) * (1.0 / 5.0 - 1.0 / 9.0),
            Self::Sine => 0.5,
            Self::Constant => 0.0,
        }
    }

    /// E f(X)^2 for X ~ U(-pi, pi), closed form.
    pub fn second_moment_uniform_pi(&self) -> f64 {
        match self {
            Self::Linear => PI * PI / 3.0,
            Self::Quadratic => PI.powi(4) / 5.0,
            Self::Sine => 0.5,
            Self::Constant => 1.0,
        }
    }
}

/// Simple-regression data set: y = c f(x) + e with e ~ N(0, 1) and c
/// chosen so Var(c f(X)) = snr.
#[derive(Debug, Clone)]
pub struct SimpleData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Scaled truth at the sample points.
    pub f: Vec<f64>,
    pub scale: f64,
}

pub fn gen_simple(truth: RegressionTruth, n: usize, snr: f64, seed: u64) -> Result<SimpleData> {
    if truth == RegressionTruth::Constant {
        return Err(FhsError::InvalidConfig(
            "a constant truth has zero variance and cannot be standardized; use the varying-coefficient model".into(),
        ));
    }
    if !(snr > 0.0) {
        return Err(FhsError::InvalidConfig(format!(
            "snr = {snr} must be positive"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (snr / truth.variance_uniform_pi()).sqrt();
    let x: Vec<f64> = (0..n)
        .map(|_| -PI + 2.0 * PI * rng.random::<f64>())
        .collect();
    let f: Vec<f64> = x.iter().map(|&xi| scale * truth.raw(xi)).collect();
    let y: Vec<f64> = f
        .iter()
        .map(|&fi| fi + rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(SimpleData { x, y, f, scale })
}

/// Varying-coefficient data: y = w c f(x) + e with both covariates
/// uniform on (-pi, pi) and c chosen so Var(w c f(X)) = snr (the signal
/// variance; w has mean zero and is independent of x, so this equals
/// c^2 E[w^2] E[f(X)^2]).
#[derive(Debug, Clone)]
pub struct VcData {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub y: Vec<f64>,
    pub f: Vec<f64>,
    pub scale: f64,
}

pub fn gen_vc(truth: RegressionTruth, n: usize, snr: f64, seed: u64) -> Result<VcData> {
    if !(snr > 0.0) {
        return Err(FhsError::InvalidConfig(format!(
            "snr = {snr} must be positive"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e_w2 = PI * PI / 3.0;
    let scale = (snr / (e_w2 * truth.second_moment_uniform_pi())).sqrt();
    let x: Vec<f64> = (0..n)
        .map(|_| -PI + 2.0 * PI * rng.random::<f64>())
        .collect();
    let w: Vec<f64> = (0..n)
        .map(|_| -PI + 2.0 * PI * rng.random::<f64>())
        .collect();
    let f: Vec<f64> = x.iter().map(|&xi| scale * truth.raw(xi)).collect();
    let y: Vec<f64> = f
        .iter()
        .zip(w.iter())
        .map(|(&fi, &wi)| wi * fi + rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(VcData { x, w, y, f, scale })
}

/// Density-estimation truths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityTruth {
    /// N(0, 1)
    Normal,
    /// exp(N(0, 1))
    LogNormal,
    /// 0.3 N(2, 1) + 0.7 N(-1, 0.5), variances in the second slot
    Mixture,
}

impl DensityTruth {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "normal" => Ok(Self::Normal),
            "lognormal" | "log-normal" => Ok(Self::LogNormal),
            "mixture" => Ok(Self::Mixture),
            other => Err(FhsError::InvalidConfig(format!(
                "unknown density truth '{other}'"
            ))),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        match self {
            Self::Normal => z,
            Self::LogNormal => z.exp(),
            Self::Mixture => {
                if rng.random::<f64>() < 0.3 {
                    2.0 + z
                } else {
                    -1.0 + 0.5_f64.sqrt() * z
                }
            }
        }
    }

    pub fn log_pdf(&self, y: f64) -> f64 {
        let log_norm = |y: f64, mu: f64, var: f64| {
            -0.5 * (y - mu) * (y - mu) / var - 0.5 * (2.0 * PI * var).ln()
        };
        match self {
            Self::Normal => log_norm(y, 0.0, 1.0),
            Self::LogNormal => {
                if y <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -y.ln() + log_norm(y.ln(), 0.0, 1.0)
                }
            }
            Self::Mixture => {
                let a = (0.3_f64).ln() + log_norm(y, 2.0, 1.0);
                let b = (0.7_f64).ln() + log_norm(y, -1.0, 0.5);
                let m = a.max(b);
                m + ((a - m).exp() + (b - m).exp()).ln()
            }
        }
    }
}

pub fn gen_density(truth: DensityTruth, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| truth.sample(&mut rng)).collect()
}

/// One additive-model data set: covariate columns, the response, the
/// noise-free signal, and the active-set flags.
#[derive(Debug, Clone)]
pub struct AdditiveData {
    /// p columns of length n.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub f_total: Vec<f64>,
    pub active: Vec<bool>,
}

/// The three additive simulation settings. `p_override` reduces the
/// number of candidate components for desk-scale runs, but never below
/// the setting's active count.
pub fn gen_additive_setting(
    setting: u8,
    n: usize,
    p_override: Option<usize>,
    seed: u64,
) -> Result<AdditiveData> {
    if n < 50 {
        return Err(FhsError::InvalidConfig(format!(
            "additive settings need n >= 50, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match setting {
        1 => {
            let p = p_override.unwrap_or(200).max(4);
            // covariates i.i.d. uniform on (-2.5, 2.5)
            let x: Vec<Vec<f64>> = (0..p)
                .map(|_| (0..n).map(|_| -2.5 + 5.0 * rng.random::<f64>()).collect())
                .collect();
            let f1 = |x: f64| -(2.0 * x).sin();
            let f2 = |x: f64| x * x - 25.0 / 12.0;
            let f3 = |x: f64| x;
            let f4 = |x: f64| (-x).exp() - 0.4 * (2.5_f64).sinh();
            let f_total: Vec<f64> = (0..n)
                .map(|i| f1(x[0][i]) + f2(x[1][i]) + f3(x[2][i]) + f4(x[3][i]))
                .collect();
            let y: Vec<f64> = f_total
                .iter()
                .map(|&f| f + rng.sample::<f64, _>(StandardNormal))
                .collect();
            let mut active = vec![false; p];
            active[..4].iter_mut().for_each(|a| *a = true);
            Ok(AdditiveData {
                x,
                y,
                f_total,
                active,
            })
        }
        2 | 3 => {
            let (p_default, multipliers, noise_sd): (usize, Vec<(usize, f64)>, f64) =
                if setting == 2 {
                    // y = 5 f1(x1) + 3 f2(x2) + 4 f3(x3) + 6 f4(x4), e ~ N(0, 1.74)
                    (
                        80,
                        vec![(0, 5.0), (1, 3.0), (2, 4.0), (3, 6.0)],
                        1.74_f64.sqrt(),
                    )
                } else {
                    // twelve active terms with multipliers 1, 1.5, 2.5, e ~ N(0, 0.5184)
                    let mut m = Vec::new();
                    for (g, mult) in [(0usize, 1.0), (1, 1.5), (2, 2.5)] {
                        for j in 0..4 {
                            m.push((4 * g + j, mult));
                        }
                    }
                    (60, m, 0.5184_f64.sqrt())
                };
            let p = p_override.unwrap_or(p_default).max(multipliers.len());
            // x_j = (W_j + U)/2 with shared U: pairwise correlation 1/2
            let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let x: Vec<Vec<f64>> = (0..p)
                .map(|_| (0..n).map(|i| (rng.random::<f64>() + u[i]) / 2.0).collect())
                .collect();
            let fs: [fn(f64) -> f64; 4] = [
                |x| x,
                |x| (2.0 * x - 1.0) * (2.0 * x - 1.0),
                |x| (2.0 * PI * x).sin() / (2.0 - (2.0 * PI * x).sin()),
                |x| {
                    let s = (2.0 * PI * x).sin();
                    let c = (2.0 * PI * x).cos();
                    0.1 * s + 0.2 * c + 0.3 * s * s + 0.4 * c * c * c + 0.5 * s * s * s
                },
            ];
            let f_total: Vec<f64> = (0..n)
                .map(|i| {
                    multipliers
                        .iter()
                        .map(|&(col, mult)| mult * fs[col % 4](x[col][i]))
                        .sum()
                })
                .collect();
            let y: Vec<f64> = f_total
                .iter()
                .map(|&f| f + noise_sd * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let mut active = vec![false; p];
            for &(col, _) in &multipliers {
                active[col] = true;
            }
            Ok(AdditiveData {
                x,
                y,
                f_total,
                active,
            })
        }
        other => Err(FhsError::InvalidConfig(format!(
            "unknown additive setting {other}; expected 1, 2 or 3"
        ))),
    }
}

/// Append i.i.d. standard Gaussian spurious columns.
pub fn spurious_columns(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    (0..count)
        .map(|_| (0..n).map(|_| normal.sample(&mut rng)).collect())
        .collect()
}
