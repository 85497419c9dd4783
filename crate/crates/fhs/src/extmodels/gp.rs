//! Shrinkage Gaussian-process prior: path samples from
//! N(0, {Sigma^{-1} + (I - Q0)/tau^2}^{-1}) with tau^2 = (1-omega)/omega
//! and omega ~ Beta(a, b). Small b pushes omega towards 1, pinning the
//! paths onto the parametric null space.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::error::{FhsError, Result};
use crate::projection::{projector, NullBasis};

/// Covariance kernels exercised by the prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// Sigma(x, x') = exp(-|x - x'|)
    Exponential,
    /// Sigma(x, x') = exp(-(x - x')^2 / 2)
    SquaredExponential,
}

impl Kernel {
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Kernel::Exponential => (-(x1 - x2).abs()).exp(),
            Kernel::SquaredExponential => (-0.5 * (x1 - x2) * (x1 - x2)).exp(),
        }
    }

    pub fn gram(&self, xs: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(xs.len(), xs.len(), |i, j| self.eval(xs[i], xs[j]))
    }
}

/// Prior specification: kernel, the null space shrunk towards, the Beta
/// hyperparameters of the shrinkage factor, and the base jitter added to
/// keep factorizations positive definite.
#[derive(Debug, Clone)]
pub struct GpShrinkagePrior {
    pub kernel: Kernel,
    pub null_basis: NullBasis,
    pub a: f64,
    pub b: f64,
    pub jitter: f64,
}

impl GpShrinkagePrior {
    pub fn new(kernel: Kernel, null_basis: NullBasis, a: f64, b: f64) -> Self {
        Self {
            kernel,
            null_basis,
            a,
            b,
            jitter: 1e-8,
        }
    }
}

/// The shrinkage factor collapses tau^2 to zero double-exponentially
/// fast for tiny b; below this floor the precision term is dominated by
/// jitter anyway and 1/tau^2 would overflow.
const TAU2_FLOOR: f64 = 1e-12;

fn cholesky_with_jitter(
    m: &DMatrix<f64>,
    base_jitter: f64,
) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let n = m.nrows();
    let scale = m.diagonal().amax().max(1.0);
    let mut jitter = base_jitter * scale;
    for _ in 0..=3 {
        let jittered = m + DMatrix::identity(n, n) * jitter;
        if let Some(chol) = Cholesky::new(jittered) {
            return Ok(chol);
        }
        jitter *= 10.0;
    }
    Err(FhsError::NumericalFailure {
        context: "gp covariance factorization (jitter escalation exhausted)".into(),
        iteration: 0,
    })
}

/// Draw `n_paths` prior sample paths at the covariate locations `xs`;
/// each row of the result is one path.
pub fn gp_prior_sample(
    prior: &GpShrinkagePrior,
    xs: &[f64],
    n_paths: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DMatrix<f64>> {
    if n_paths == 0 {
        return Err(FhsError::InvalidConfig("n_paths must be at least 1".into()));
    }
    let beta = Beta::new(prior.a, prior.b).map_err(|e| {
        FhsError::InvalidConfig(format!("invalid Beta({}, {}): {e}", prior.a, prior.b))
    })?;
    let ctx = GpContext::build(prior, xs)?;
    let mut paths = DMatrix::zeros(n_paths, xs.len());
    for p in 0..n_paths {
        let omega: f64 = beta.sample(rng);
        let tau2 = ((1.0 - omega) / omega.max(f64::MIN_POSITIVE)).max(TAU2_FLOOR);
        let path = ctx.sample_path(tau2, rng)?;
        paths.row_mut(p).copy_from(&path.transpose());
    }
    Ok(paths)
}

/// Paths at a fixed shrinkage scale; used by the covariance tests.
pub fn gp_prior_sample_fixed_tau(
    prior: &GpShrinkagePrior,
    xs: &[f64],
    tau2: f64,
    n_paths: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DMatrix<f64>> {
    let ctx = GpContext::build(prior, xs)?;
    let mut paths = DMatrix::zeros(n_paths, xs.len());
    for p in 0..n_paths {
        let path = ctx.sample_path(tau2.max(TAU2_FLOOR), rng)?;
        paths.row_mut(p).copy_from(&path.transpose());
    }
    Ok(paths)
}

/// Fraction of a path's energy orthogonal to the null space,
/// ||(I - Q0) F|| / ||F||; the statistic behind the near-parametric
/// path checks.
pub fn residual_energy_ratio(
    prior: &GpShrinkagePrior,
    xs: &[f64],
    path: &DVector<f64>,
) -> Result<f64> {
    let q0 = projector(&prior.null_basis.build(xs))?;
    let norm = path.norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok((path - q0.apply(path)).norm() / norm)
}

struct GpContext {
    sigma_inv: DMatrix<f64>,
    complement: DMatrix<f64>, // I - Q0
    jitter: f64,
}

impl GpContext {
    fn build(prior: &GpShrinkagePrior, xs: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n == 0 {
            return Err(FhsError::Data("no covariate locations".into()));
        }
        let sigma = prior.kernel.gram(xs);
        let chol = cholesky_with_jitter(&sigma, prior.jitter)?;
        let sigma_inv = chol.solve(&DMatrix::identity(n, n));
        let q0 = projector(&prior.null_basis.build(xs))?;
        let complement = DMatrix::identity(n, n) - q0.matrix();
        Ok(Self {
            sigma_inv,
            complement,
            jitter: prior.jitter,
        })
    }

    fn sample_path(&self, tau2: f64, rng: &mut impl Rng) -> Result<DVector<f64>> {
        let n = self.sigma_inv.nrows();
        let precision = &self.sigma_inv + &self.complement / tau2;
        let chol = cholesky_with_jitter(&precision, self.jitter)?;
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        // precision = L L^T, so L^{-T} z has covariance precision^{-1}
        chol.l()
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or_else(|| FhsError::NumericalFailure {
                context: "gp path triangular solve".into(),
                iteration: 0,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn uniform_xs(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n)
            .map(|_| -PI + 2.0 * PI * rng.random::<f64>())
            .collect()
    }

    #[test]
    fn unshrunk_limit_recovers_kernel_variance() {
        // tau -> infinity: covariance -> Sigma, so path variance at each
        // point approaches the kernel diagonal (= 1)
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs = uniform_xs(40, &mut rng);
        let prior = GpShrinkagePrior::new(Kernel::Exponential, NullBasis::Linear, 0.5, 0.5);
        let paths = gp_prior_sample_fixed_tau(&prior, &xs, 1e12, 5000, &mut rng).unwrap();
        for j in (0..40).step_by(7) {
            let col = paths.column(j);
            let var = col.iter().map(|v| v * v).sum::<f64>() / col.len() as f64;
            // MC error of a variance over 5000 draws ~ sqrt(2/5000) ~ 0.02
            assert!((var - 1.0).abs() < 0.08, "var {var} at point {j}");
        }
    }

    #[test]
    fn fixed_tau_covariance_matches_analytic_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs = uniform_xs(12, &mut rng);
        let prior = GpShrinkagePrior::new(Kernel::Exponential, NullBasis::Linear, 0.5, 0.5);
        let tau2 = 0.5;
        let n_paths = 10_000;
        let paths = gp_prior_sample_fixed_tau(&prior, &xs, tau2, n_paths, &mut rng).unwrap();

        let sigma = Kernel::Exponential.gram(&xs);
        let sigma_inv = sigma.clone().try_inverse().unwrap();
        let q0 = projector(&NullBasis::Linear.build(&xs)).unwrap().matrix();
        let ident = DMatrix::identity(12, 12);
        let precision = &sigma_inv + (&ident - &q0) / tau2;
        let cov = precision.try_inverse().unwrap();

        // empirical covariance at 5 probe points
        let probes = [0usize, 3, 5, 8, 11];
        for &i in &probes {
            for &j in &probes {
                let mut acc = 0.0;
                for p in 0..n_paths {
                    acc += paths[(p, i)] * paths[(p, j)];
                }
                let emp = acc / n_paths as f64;
                let diag_scale = (cov[(i, i)] * cov[(j, j)]).sqrt();
                assert!(
                    (emp - cov[(i, j)]).abs() < 0.05 * diag_scale.max(cov[(i, j)].abs()),
                    "cov[{i},{j}]: emp {emp} vs {}",
                    cov[(i, j)]
                );
            }
        }
    }

    #[test]
    fn strong_shrinkage_pins_paths_to_the_null_space() {
        let n = 100;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xs = uniform_xs(n, &mut rng);
        let b = 1.0 / (n as f64 * n as f64);
        let prior = GpShrinkagePrior::new(Kernel::Exponential, NullBasis::Linear, 0.5, b);
        let paths = gp_prior_sample(&prior, &xs, 300, &mut rng).unwrap();
        let mut mean_ratio = 0.0;
        for p in 0..300 {
            let path = paths.row(p).transpose();
            mean_ratio += residual_energy_ratio(&prior, &xs, &path).unwrap();
        }
        mean_ratio /= 300.0;
        assert!(mean_ratio < 0.1, "mean residual ratio {mean_ratio}");
    }

    #[test]
    fn monotone_shrinkage_in_b() {
        let n = 100;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs = uniform_xs(n, &mut rng);
        let mut means = Vec::new();
        let mut sds = Vec::new();
        for &b in &[1e-1, 1e-2, 1.0 / (n as f64 * n as f64)] {
            let prior = GpShrinkagePrior::new(Kernel::Exponential, NullBasis::Linear, 0.5, b);
            let paths = gp_prior_sample(&prior, &xs, 400, &mut rng).unwrap();
            let ratios: Vec<f64> = (0..400)
                .map(|p| residual_energy_ratio(&prior, &xs, &paths.row(p).transpose()).unwrap())
                .collect();
            let m = ratios.iter().sum::<f64>() / 400.0;
            let v = ratios.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / 399.0;
            means.push(m);
            sds.push((v / 400.0).sqrt());
        }
        // decreasing b must decrease the mean ratio by 3 standard errors
        assert!(
            means[0] - means[1] > 3.0 * (sds[0] + sds[1]),
            "means {means:?} sds {sds:?}"
        );
        assert!(
            means[1] - means[2] > 3.0 * (sds[1] + sds[2]),
            "means {means:?} sds {sds:?}"
        );
    }

    #[test]
    fn piecewise_linear_null_space() {
        // null = {1, (x+1)+, (-x-1)+, (x-1)+}
        let n = 100;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let xs = uniform_xs(n, &mut rng);
        let cols = DMatrix::from_fn(n, 4, |i, j| {
            let x = xs[i];
            match j {
                0 => 1.0,
                1 => (x + 1.0).max(0.0),
                2 => (-x - 1.0).max(0.0),
                _ => (x - 1.0).max(0.0),
            }
        });
        let b = 1.0 / (n as f64 * n as f64);
        let prior = GpShrinkagePrior::new(Kernel::Exponential, NullBasis::Custom(cols), 0.5, b);
        let paths = gp_prior_sample(&prior, &xs, 300, &mut rng).unwrap();
        let mut mean_ratio = 0.0;
        for p in 0..300 {
            mean_ratio += residual_energy_ratio(&prior, &xs, &paths.row(p).transpose()).unwrap();
        }
        mean_ratio /= 300.0;
        assert!(mean_ratio < 0.1, "mean residual ratio {mean_ratio}");
    }

    #[test]
    fn kernel_gram_is_symmetric_with_unit_diagonal() {
        let xs = [0.0, 0.4, 1.3, -2.0];
        for k in [Kernel::Exponential, Kernel::SquaredExponential] {
            let g = k.gram(&xs);
            for i in 0..4 {
                assert_relative_eq!(g[(i, i)], 1.0, epsilon = 1e-14);
                for j in 0..4 {
                    assert_relative_eq!(g[(i, j)], g[(j, i)], epsilon = 1e-15);
                }
            }
        }
    }
}
