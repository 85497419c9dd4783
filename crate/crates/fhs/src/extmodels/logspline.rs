//! Log-spline density estimation: p(y) = exp(f(y)) / ∫ exp(f(t)) dt with
//! f spanned by a B-spline basis, shrunk towards quadratic log-densities
//! (Gaussian shapes) through the same projection prior as the regression
//! models. Coefficients move by random-walk Metropolis with the proposal
//! scale adapted during burn-in only; the shrinkage scale keeps its
//! slice update with sigma^2 fixed at 1.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::basis::BSplineBasis;
use crate::error::{FhsError, Result};
use crate::projection::{NullBasis, ShrinkageDesign};
use crate::sampler::{slice_eta_step, ChainDraws, FhsConfig};
use crate::special::logsumexp;

/// Random-walk Metropolis settings. The step scale is multiplied into a
/// whitened proposal (the inverse Cholesky of the basis Gram), adapted
/// towards the 20-40% acceptance band during burn-in, then frozen.
#[derive(Debug, Clone)]
pub struct MhSettings {
    pub initial_step: f64,
    pub target_low: f64,
    pub target_high: f64,
    pub adapt_batch: usize,
}

impl Default for MhSettings {
    fn default() -> Self {
        Self {
            initial_step: 0.5,
            target_low: 0.2,
            target_high: 0.4,
            adapt_batch: 50,
        }
    }
}

/// The basis and quadrature grid of a fitted log-spline model.
#[derive(Debug, Clone)]
pub struct LogSplineModel {
    pub basis: BSplineBasis,
    /// Equally spaced quadrature nodes over the extended sample range.
    pub quad_nodes: Vec<f64>,
    /// Trapezoid weights matching `quad_nodes`.
    pub quad_weights: Vec<f64>,
    /// Basis evaluated at the quadrature nodes (nodes x k).
    grid_design: DMatrix<f64>,
}

pub const QUAD_NODES: usize = 512;
pub const RANGE_EXTENSION: f64 = 0.1;

impl LogSplineModel {
    /// Build the model over the sample range extended 10% per side; the
    /// basis lives on the same extended interval so the quadrature never
    /// leaves its domain.
    pub fn from_sample(y: &[f64], k_n: usize, degree: usize) -> Result<Self> {
        Self::from_sample_with_nodes(y, k_n, degree, QUAD_NODES)
    }

    pub fn from_sample_with_nodes(
        y: &[f64],
        k_n: usize,
        degree: usize,
        nodes: usize,
    ) -> Result<Self> {
        if y.len() < k_n {
            return Err(FhsError::Data(format!(
                "need at least k_n = {k_n} observations, got {}",
                y.len()
            )));
        }
        let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let pad = (hi - lo) * RANGE_EXTENSION;
        // interior knots at sample quantiles: equally spaced knots leave
        // the outer spline columns supported by one or two observations
        // on skewed samples (log-normal targets), making the data design
        // rank deficient
        let mut sorted = y.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n_breaks = k_n - degree + 1;
        let mut breaks = Vec::with_capacity(n_breaks);
        breaks.push(lo - pad);
        for i in 1..n_breaks - 1 {
            let q = crate::sampler::sorted_quantile(&sorted, i as f64 / (n_breaks - 1) as f64);
            let prev = *breaks.last().unwrap();
            // ties in the sample would collapse adjacent knots
            breaks.push(if q > prev { q } else { prev + (hi - lo) * 1e-9 });
        }
        breaks.push(hi + pad);
        let basis = BSplineBasis::with_breaks(degree, &breaks)?;
        let (a, b) = basis.domain();
        let h = (b - a) / (nodes - 1) as f64;
        let quad_nodes: Vec<f64> = (0..nodes)
            .map(|i| if i + 1 == nodes { b } else { a + h * i as f64 })
            .collect();
        let mut quad_weights = vec![h; nodes];
        quad_weights[0] = h / 2.0;
        quad_weights[nodes - 1] = h / 2.0;
        let grid_design = basis.design_matrix(&quad_nodes)?.values;
        Ok(Self {
            basis,
            quad_nodes,
            quad_weights,
            grid_design,
        })
    }

    /// log ∫ exp(f) over the grid; the integrand is recentred by its
    /// maximum before exponentiation, so any additive gauge of f cancels.
    pub fn log_normalizer(&self, beta: &DVector<f64>) -> f64 {
        let f = &self.grid_design * beta;
        let terms: Vec<f64> = f
            .iter()
            .zip(self.quad_weights.iter())
            .map(|(fi, wi)| fi + wi.ln())
            .collect();
        logsumexp(&terms)
    }

    /// Normalized log density at arbitrary points inside the domain.
    pub fn log_density_at(&self, beta: &DVector<f64>, points: &[f64]) -> Result<Vec<f64>> {
        let design = self.basis.design_matrix(points)?;
        let f = design.values * beta;
        let log_z = self.log_normalizer(beta);
        Ok(f.iter().map(|fi| fi - log_z).collect())
    }

    /// Normalized density on the quadrature grid.
    pub fn density_on_grid(&self, beta: &DVector<f64>) -> Vec<f64> {
        let f = &self.grid_design * beta;
        let log_z = self.log_normalizer(beta);
        f.iter().map(|fi| (fi - log_z).exp()).collect()
    }
}

/// Fitted log-spline chain: coefficient draws, the model geometry, and
/// the realized Metropolis acceptance rate after burn-in.
#[derive(Debug, Clone)]
pub struct LogSplineFit {
    pub draws: ChainDraws,
    pub model: LogSplineModel,
    pub acceptance_rate: f64,
}

impl LogSplineFit {
    /// Posterior mean of f at the given points (up to the model's
    /// additive gauge).
    pub fn mean_log_density_unnormalized(&self, points: &[f64]) -> Result<Vec<f64>> {
        let design = self.model.basis.design_matrix(points)?;
        let f = design.values * self.draws.beta_mean();
        Ok(f.as_slice().to_vec())
    }
}

/// Newton ascent to the flat-prior posterior mode (the log-spline MLE).
/// The Hessian is singular along the additive gauge, so a small ridge is
/// added; 40 damped steps are plenty for an 8-dimensional concave
/// problem and the result only seeds the chain.
fn flat_mle(
    model: &LogSplineModel,
    phi_colsums: &DVector<f64>,
    gram: &DMatrix<f64>,
    n: usize,
    k: usize,
) -> DVector<f64> {
    let ridge = 1e-8 * gram.trace().max(1.0);
    let mut beta = DVector::zeros(k);
    let objective = |b: &DVector<f64>| phi_colsums.dot(b) - n as f64 * model.log_normalizer(b);
    let mut obj = objective(&beta);
    for _ in 0..40 {
        let log_z = model.log_normalizer(&beta);
        let f = &model.grid_design * &beta;
        let p: DVector<f64> = DVector::from_fn(model.quad_nodes.len(), |g, _| {
            (f[g] - log_z).exp() * model.quad_weights[g]
        });
        let expected_phi = model.grid_design.transpose() * &p;
        let grad = phi_colsums - &expected_phi * n as f64;
        let mut hess = DMatrix::zeros(k, k);
        for g in 0..model.quad_nodes.len() {
            let row = model.grid_design.row(g).transpose();
            hess += &row * row.transpose() * p[g];
        }
        hess -= &expected_phi * expected_phi.transpose();
        hess *= n as f64;
        for i in 0..k {
            hess[(i, i)] += ridge;
        }
        let Some(chol) = nalgebra::Cholesky::new(hess) else {
            break;
        };
        let direction = chol.solve(&grad);
        let mut stepped = false;
        for halving in 0..12 {
            let cand = &beta + &direction * 0.5_f64.powi(halving);
            let cand_obj = objective(&cand);
            if cand_obj > obj {
                beta = cand;
                obj = cand_obj;
                stepped = true;
                break;
            }
        }
        if !stepped || grad.amax() < 1e-8 * n as f64 {
            break;
        }
    }
    beta
}

/// Fit the shrinkage log-spline model (null space {1, y, y^2}).
pub fn fit_logspline(y: &[f64], cfg: &FhsConfig, mh: &MhSettings) -> Result<LogSplineFit> {
    fit_logspline_impl(y, cfg, mh, true)
}

/// The unshrunk reference fit: the same sampler with a flat prior on the
/// coefficients (no projection penalty, no shrinkage updates).
pub fn fit_logspline_flat(y: &[f64], cfg: &FhsConfig, mh: &MhSettings) -> Result<LogSplineFit> {
    fit_logspline_impl(y, cfg, mh, false)
}

fn fit_logspline_impl(
    y: &[f64],
    cfg: &FhsConfig,
    mh: &MhSettings,
    shrink: bool,
) -> Result<LogSplineFit> {
    cfg.validate()?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(FhsError::Data("sample contains non-finite values".into()));
    }
    let n = y.len();
    let model = LogSplineModel::from_sample(y, cfg.k_n, cfg.degree)?;
    let k = cfg.k_n;
    let phi = model.basis.design_matrix(y)?;
    // data-dependent null design {1, Y, Y^2}
    let design = ShrinkageDesign::new(&phi, NullBasis::Quadratic.build(y))?;
    let d0 = design.d0();
    let b = cfg.resolve_b(n);

    // sufficient statistic for the data term: sum_i f(y_i) = (1' Phi) beta
    let phi_colsums = phi.values.row_sum().transpose();
    let gram = phi.values.transpose() * &phi.values;
    // c1^T c1 = Phi^T (I - Q0) Phi drives both the prior and the
    // shrinkage-aware proposal geometry
    let complement_gram = design.phi1().transpose() * &phi.values;
    let complement_gram = complement_gram.transpose() * complement_gram;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut eta = 1.0_f64;
    let mut step = mh.initial_step;

    let log_post = |beta: &DVector<f64>, eta: f64| -> f64 {
        let data_term = phi_colsums.dot(beta) - n as f64 * model.log_normalizer(beta);
        if shrink {
            data_term - 0.5 * eta * design.complement_quad_form(beta)
        } else {
            data_term
        }
    };

    // start at the flat-prior maximizer so the prior's scale update sees
    // a sensible fit (starting inside the null space makes the improper
    // s = 0 conditional ratchet eta upward and the chain can never leave)
    let mut beta = flat_mle(&model, &phi_colsums, &gram, n, k);

    // Proposal covariance ~ (Phi'Phi + eta C)^{-1}: complement moves
    // scale like eta^{-1/2}, so acceptance survives deep shrinkage while
    // the null-space directions keep exploring. The factor depends only
    // on eta (not beta), so the move stays a symmetric random walk.
    // Beyond the cap the complement is numerically pinned anyway.
    let proposal_chol = |eta: f64| -> DMatrix<f64> {
        let m = if shrink {
            &gram + &complement_gram * eta.min(1e12)
        } else {
            gram.clone()
        };
        nalgebra::Cholesky::new(m)
            .expect("proposal precision is SPD by construction")
            .l()
            .transpose()
            .into_owned()
    };
    let mut prop_r = proposal_chol(eta);

    let mut current_lp = log_post(&beta, eta);
    let n_kept = cfg.n_iter - cfg.n_burnin;
    let mut betas = DMatrix::zeros(n_kept, k);
    let mut omegas = Vec::with_capacity(n_kept);
    let mut accepted_kept = 0usize;
    let mut accepted_batch = 0usize;

    for it in 0..cfg.n_iter {
        // random-walk Metropolis move of the coefficients
        let z = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let dir = prop_r
            .solve_upper_triangular(&z)
            .ok_or_else(|| FhsError::RankDeficient {
                deficient: 1,
                cols: k,
            })?;
        let proposal = &beta + dir * step;
        let prop_lp = log_post(&proposal, eta);
        let log_u = rng.random::<f64>().clamp(1e-300, 1.0).ln();
        if log_u < prop_lp - current_lp {
            beta = proposal;
            current_lp = prop_lp;
            accepted_batch += 1;
            if it >= cfg.n_burnin {
                accepted_kept += 1;
            }
        }

        if shrink {
            let s = design.complement_quad_form(&beta) / 2.0;
            let eta_new =
                slice_eta_step(eta, cfg.a + b, cfg.a + (k - d0) as f64 / 2.0, s, &mut rng);
            if eta != eta_new {
                eta = eta_new;
                current_lp = log_post(&beta, eta);
                prop_r = proposal_chol(eta);
            }
        }

        // step-size adaptation during burn-in only, frozen afterwards
        if it < cfg.n_burnin && (it + 1) % mh.adapt_batch == 0 {
            let rate = accepted_batch as f64 / mh.adapt_batch as f64;
            if rate < mh.target_low {
                step *= 0.8;
            } else if rate > mh.target_high {
                step *= 1.25;
            }
            accepted_batch = 0;
        } else if (it + 1) % mh.adapt_batch == 0 {
            accepted_batch = 0;
        }

        if !current_lp.is_finite() || beta.iter().any(|v| !v.is_finite()) {
            return Err(FhsError::NumericalFailure {
                context: "log-spline chain".into(),
                iteration: it,
            });
        }
        if it >= cfg.n_burnin {
            let row = it - cfg.n_burnin;
            betas.row_mut(row).copy_from(&beta.transpose());
            let omega = eta / (1.0 + eta);
            omegas.push(omega.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0));
        }
    }

    let acceptance_rate = accepted_kept as f64 / n_kept as f64;
    Ok(LogSplineFit {
        draws: ChainDraws {
            betas,
            omegas,
            sigma2s: vec![1.0; n_kept],
            seed: cfg.seed,
            a: cfg.a,
            b,
            n_iter: cfg.n_iter,
            n_burnin: cfg.n_burnin,
        },
        model,
        acceptance_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand_distr::{Distribution, Normal};

    fn normal_sample(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        (0..n).map(|_| normal.sample(&mut rng)).collect()
    }

    /// Coefficients reproducing a target function exactly (cubic splines
    /// reproduce quadratics): least squares on a dense grid.
    fn project_onto_basis(model: &LogSplineModel, f: impl Fn(f64) -> f64) -> DVector<f64> {
        let (lo, hi) = model.basis.domain();
        let xs: Vec<f64> = (0..200)
            .map(|i| {
                if i == 199 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / 199.0
                }
            })
            .collect();
        let design = model.basis.design_matrix(&xs).unwrap();
        let target = DVector::from_fn(200, |i, _| f(xs[i]));
        let qr = design.values.clone().qr();
        qr.r()
            .solve_upper_triangular(&(qr.q().transpose() * target))
            .unwrap()
    }

    #[test]
    fn quadratic_log_density_is_gaussian() {
        let y = normal_sample(300, 1);
        let model = LogSplineModel::from_sample(&y, 8, 3).unwrap();
        let beta = project_onto_basis(&model, |t| -0.5 * t * t);
        let dens = model.density_on_grid(&beta);
        // compare against the truncated-normalized Gaussian under the
        // same quadrature
        let phi: Vec<f64> = model
            .quad_nodes
            .iter()
            .map(|&t| (-0.5 * t * t).exp())
            .collect();
        let z: f64 = phi
            .iter()
            .zip(model.quad_weights.iter())
            .map(|(p, w)| p * w)
            .sum();
        for (i, d) in dens.iter().enumerate() {
            assert_relative_eq!(*d, phi[i] / z, max_relative = 1e-8);
        }
    }

    #[test]
    fn additive_gauge_leaves_density_unchanged() {
        let y = normal_sample(200, 2);
        let model = LogSplineModel::from_sample(&y, 8, 3).unwrap();
        let beta = project_onto_basis(&model, |t| 0.3 * t.sin() - 0.1 * t * t);
        // partition of unity: adding c to every coefficient shifts f by c
        let shifted = beta.add_scalar(5.0);
        let d1 = model.density_on_grid(&beta);
        let d2 = model.density_on_grid(&shifted);
        for (a, b) in d1.iter().zip(d2.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn kept_draws_integrate_to_one() {
        let y = normal_sample(150, 3);
        let cfg = FhsConfig {
            n_iter: 400,
            n_burnin: 200,
            seed: 4,
            ..FhsConfig::default()
        };
        let fit = fit_logspline(&y, &cfg, &MhSettings::default()).unwrap();
        for r in (0..fit.draws.n_kept()).step_by(40) {
            let beta = fit.draws.betas.row(r).transpose();
            let dens = fit.model.density_on_grid(&beta);
            let integral: f64 = dens
                .iter()
                .zip(fit.model.quad_weights.iter())
                .map(|(d, w)| d * w)
                .sum();
            assert!((integral - 1.0).abs() < 1e-10, "integral {integral}");
        }
    }

    #[test]
    fn doubling_quadrature_nodes_is_stable() {
        let y = normal_sample(200, 5);
        let m1 = LogSplineModel::from_sample(&y, 8, 3).unwrap();
        let m2 = LogSplineModel::from_sample_with_nodes(&y, 8, 3, 2 * QUAD_NODES).unwrap();
        let beta = project_onto_basis(&m1, |t| -0.4 * t * t + 0.2 * t);
        let diff = (m1.log_normalizer(&beta) - m2.log_normalizer(&beta)).abs();
        assert!(diff < 1e-6, "log-normalizer drift {diff}");
    }

    #[test]
    fn shrinks_towards_gaussian_on_normal_data() {
        let y = normal_sample(200, 6);
        let cfg = FhsConfig {
            n_iter: 4000,
            n_burnin: 1500,
            seed: 7,
            ..FhsConfig::default()
        };
        let fit = fit_logspline(&y, &cfg, &MhSettings::default()).unwrap();
        assert!(
            fit.draws.omega_mean() > 0.8,
            "omega mean {} on normal data",
            fit.draws.omega_mean()
        );
        assert!(
            fit.acceptance_rate > 0.1 && fit.acceptance_rate < 0.6,
            "acceptance rate {}",
            fit.acceptance_rate
        );
    }

    #[test]
    fn deterministic_given_seed() {
        let y = normal_sample(100, 8);
        let cfg = FhsConfig {
            n_iter: 300,
            n_burnin: 100,
            seed: 9,
            ..FhsConfig::default()
        };
        let f1 = fit_logspline(&y, &cfg, &MhSettings::default()).unwrap();
        let f2 = fit_logspline(&y, &cfg, &MhSettings::default()).unwrap();
        assert_eq!(f1.draws.betas, f2.draws.betas);
        assert_eq!(f1.draws.omegas, f2.draws.omegas);
    }
}
