//! Replicated simulation experiments: generate data, fit the shrinkage
//! estimator and its unshrunk reference, aggregate metrics, and write
//! the per-replicate / aggregate CSVs and plots. Replicates fan out to a
//! worker pool; results are collected in replicate order so outputs are
//! byte-identical across reruns with the same master seed.

use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::additive::{backfit_chain, backfit_least_squares, select_components, AdditiveDesign};
use crate::basis::BSplineBasis;
use crate::error::{FhsError, Result};
use crate::extmodels::logspline::{fit_logspline, fit_logspline_flat, MhSettings};
use crate::extmodels::vc::{fit_varying_coefficient, VaryingCoefficientData};
use crate::projection::{NullBasis, ShrinkageDesign};
use crate::sampler::{derive_seed, posterior_summary, run_chain, FhsConfig};

use super::csvio;
use super::datagen::{
    gen_additive_setting, gen_density, gen_simple, gen_vc, DensityTruth, RegressionTruth,
};
use super::metrics::{empirical_mse, gauge_aligned_mse, MetricsReport, ReplicateMetrics};
use super::svg::{write_line_plot, Band, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Simple,
    VaryingCoefficient,
    Density,
    Additive {
        setting: u8,
        p_override: Option<usize>,
    },
}

impl ModelKind {
    pub fn name(&self) -> String {
        match self {
            ModelKind::Simple => "simple".into(),
            ModelKind::VaryingCoefficient => "varying_coefficient".into(),
            ModelKind::Density => "density".into(),
            ModelKind::Additive { setting, .. } => format!("additive_setting_{setting}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationSpec {
    pub model: ModelKind,
    /// Truth name for the univariate models (linear/quadratic/sine,
    /// constant for the varying-coefficient model, normal/lognormal/
    /// mixture for densities); ignored by the additive settings.
    pub truth: String,
    pub n: usize,
    pub replicates: usize,
    pub snr: f64,
    pub master_seed: u64,
    /// Credible level for bands and selection.
    pub level: f64,
    /// Also write replicate 0's kept draws to draws.csv.
    pub save_draws: bool,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(FhsError::InvalidConfig(
                "need at least one replicate".into(),
            ));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(FhsError::InvalidConfig(format!(
                "level {} must lie in (0, 1)",
                self.level
            )));
        }
        match self.model {
            ModelKind::Simple => RegressionTruth::parse(&self.truth).map(|_| ()),
            ModelKind::VaryingCoefficient => RegressionTruth::parse(&self.truth).map(|_| ()),
            ModelKind::Density => DensityTruth::parse(&self.truth).map(|_| ()),
            ModelKind::Additive { setting, .. } => {
                if (1..=3).contains(&setting) {
                    Ok(())
                } else {
                    Err(FhsError::InvalidConfig(format!(
                        "additive setting {setting} must be 1, 2 or 3"
                    )))
                }
            }
        }
    }
}

/// Curve data captured from replicate 0 for the plots, plus its kept
/// draws when requested.
struct PlotPayload {
    grid: Vec<f64>,
    mean: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    truth: Vec<f64>,
    baseline: Vec<f64>,
    draws: Option<crate::sampler::ChainDraws>,
}

type RepOut = (ReplicateMetrics, Option<PlotPayload>);

pub fn run_experiment(
    spec: &SimulationSpec,
    cfg: &FhsConfig,
    out_dir: &Path,
) -> Result<MetricsReport> {
    spec.validate()?;
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;

    let results: Vec<RepOut> = (0..spec.replicates)
        .into_par_iter()
        .map(|rep| {
            let want_plot = rep == 0;
            match run_replicate(spec, cfg, rep, want_plot) {
                Ok(out) => out,
                Err(_) => (ReplicateMetrics::failed(rep), None),
            }
        })
        .collect();

    let mut payload = None;
    let mut reps = Vec::with_capacity(results.len());
    for (metrics, plot) in results {
        if plot.is_some() {
            payload = plot;
        }
        reps.push(metrics);
    }
    let report = MetricsReport::from_replicates(reps);

    csvio::write_per_replicate_csv(&out_dir.join("per_replicate.csv"), &report.per_replicate)?;
    csvio::write_aggregate_csv(&out_dir.join("aggregate.csv"), &report)?;
    write_metadata(spec, cfg, out_dir)?;
    if let Some(p) = payload {
        if let Some(d) = &p.draws {
            csvio::write_draws_csv(&out_dir.join("draws.csv"), d)?;
        }
        let title = format!("{} / {}", spec.model.name(), spec.truth);
        write_line_plot(
            &out_dir.join("fit_fhs.svg"),
            &title,
            &[
                Series {
                    xs: &p.grid,
                    ys: &p.mean,
                    color: "crimson",
                    dashed: false,
                    label: "posterior mean",
                },
                Series {
                    xs: &p.grid,
                    ys: &p.truth,
                    color: "black",
                    dashed: false,
                    label: "truth",
                },
            ],
            Some(&Band {
                xs: &p.grid,
                lower: &p.lower,
                upper: &p.upper,
                color: "crimson",
            }),
        )?;
        write_line_plot(
            &out_dir.join("fit_baseline.svg"),
            &format!("{title} (unshrunk)"),
            &[
                Series {
                    xs: &p.grid,
                    ys: &p.baseline,
                    color: "steelblue",
                    dashed: false,
                    label: "unshrunk fit",
                },
                Series {
                    xs: &p.grid,
                    ys: &p.truth,
                    color: "black",
                    dashed: false,
                    label: "truth",
                },
            ],
            None,
        )?;
    }
    Ok(report)
}

fn write_metadata(spec: &SimulationSpec, cfg: &FhsConfig, out_dir: &Path) -> Result<()> {
    use std::fmt::Write as _;
    let mut s = String::new();
    writeln!(s, "generator = fhs {}", env!("CARGO_PKG_VERSION")).expect("string write");
    writeln!(s, "model = {}", spec.model.name()).expect("string write");
    writeln!(s, "truth = {}", spec.truth).expect("string write");
    writeln!(s, "n = {}", spec.n).expect("string write");
    writeln!(s, "replicates = {}", spec.replicates).expect("string write");
    writeln!(s, "snr = {}", spec.snr).expect("string write");
    writeln!(s, "level = {}", spec.level).expect("string write");
    writeln!(s, "master_seed = {}", spec.master_seed).expect("string write");
    writeln!(s, "k_n = {}", cfg.k_n).expect("string write");
    writeln!(s, "degree = {}", cfg.degree).expect("string write");
    writeln!(s, "a = {}", cfg.a).expect("string write");
    writeln!(s, "b = {:?}", cfg.b).expect("string write");
    writeln!(s, "b_resolved_at_n = {}", cfg.resolve_b(spec.n)).expect("string write");
    writeln!(s, "sigma2_prior = {:?}", cfg.sigma2_prior).expect("string write");
    writeln!(s, "n_iter = {}", cfg.n_iter).expect("string write");
    writeln!(s, "n_burnin = {}", cfg.n_burnin).expect("string write");
    std::fs::write(out_dir.join("metadata.txt"), s)?;
    Ok(())
}

fn run_replicate(
    spec: &SimulationSpec,
    cfg: &FhsConfig,
    rep: usize,
    want_plot: bool,
) -> Result<RepOut> {
    let data_seed = derive_seed(spec.master_seed, 2 * rep as u64);
    let chain_seed = derive_seed(spec.master_seed, 2 * rep as u64 + 1);
    let mut rep_cfg = cfg.clone();
    rep_cfg.seed = chain_seed;
    match spec.model {
        ModelKind::Simple => run_simple_rep(spec, &rep_cfg, rep, data_seed, want_plot),
        ModelKind::VaryingCoefficient => run_vc_rep(spec, &rep_cfg, rep, data_seed, want_plot),
        ModelKind::Density => run_density_rep(spec, &rep_cfg, rep, data_seed, want_plot),
        ModelKind::Additive {
            setting,
            p_override,
        } => run_additive_rep(spec, &rep_cfg, rep, setting, p_override, data_seed),
    }
}

fn curve_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (points - 1) as f64
            }
        })
        .collect()
}

fn run_simple_rep(
    spec: &SimulationSpec,
    cfg: &FhsConfig,
    rep: usize,
    data_seed: u64,
    want_plot: bool,
) -> Result<RepOut> {
    let truth = RegressionTruth::parse(&spec.truth)?;
    let data = gen_simple(truth, spec.n, spec.snr, data_seed)?;
    let lo = data.x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = data.x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let basis = BSplineBasis::new(cfg.k_n, cfg.degree, (lo, hi))?;
    let phi = basis.design_matrix(&data.x)?;
    let design = ShrinkageDesign::new(&phi, NullBasis::Linear.build(&data.x))?;
    let y = DVector::from_vec(data.y.clone());
    let draws = run_chain(&y, &design, cfg)?;

    let fhat = &phi.values * draws.beta_mean();
    let mse_fhs = empirical_mse(fhat.as_slice(), &data.f)?;
    let baseline_fit = design.q_phi().apply(&y);
    let mse_base = empirical_mse(baseline_fit.as_slice(), &data.f)?;

    let payload = if want_plot {
        let grid = curve_grid(lo, hi, 201);
        let summary = posterior_summary(&draws, &basis, spec.level, &grid)?;
        let truth_curve: Vec<f64> = grid.iter().map(|&x| data.scale * truth.raw(x)).collect();
        let base_beta = design.least_squares(&y);
        let baseline_curve = basis.design_matrix(&grid)?.values * base_beta;
        Some(PlotPayload {
            grid,
            mean: summary.mean,
            lower: summary.lower,
            upper: summary.upper,
            truth: truth_curve,
            baseline: baseline_curve.as_slice().to_vec(),
            draws: spec.save_draws.then(|| draws.clone()),
        })
    } else {
        None
    };

    Ok((
        ReplicateMetrics {
            replicate: rep,
            mse_fhs_x100: 100.0 * mse_fhs,
            mse_baseline_x100: 100.0 * mse_base,
            omega_mean: draws.omega_mean(),
            sigma2_mean: draws.sigma2_mean(),
            mcc: None,
            true_model_selected: None,
            n_spurious_selected: None,
            test_error: None,
            failed: false,
        },
        payload,
    ))
}

fn run_vc_rep(
    spec: &SimulationSpec,
    cfg: &FhsConfig,
    rep: usize,
    data_seed: u64,
    want_plot: bool,
) -> Result<RepOut> {
    let truth = RegressionTruth::parse(&spec.truth)?;
    let data = gen_vc(truth, spec.n, spec.snr, data_seed)?;
    let vc_data = VaryingCoefficientData::new(data.y.clone(), data.w.clone(), data.x.clone())?;
    let fit = fit_varying_coefficient(&vc_data, &NullBasis::Constant, cfg)?;

    // the estimand is the coefficient function f, evaluated with the
    // unweighted basis
    let phi = fit.basis.design_matrix(&data.x)?;
    let fhat = &phi.values * fit.draws.beta_mean();
    let mse_fhs = empirical_mse(fhat.as_slice(), &data.f)?;
    let y = DVector::from_vec(data.y.clone());
    let base_beta = fit.design.least_squares(&y);
    let base_fit = &phi.values * &base_beta;
    let mse_base = empirical_mse(base_fit.as_slice(), &data.f)?;

    let payload = if want_plot {
        let (lo, hi) = fit.basis.domain();
        let grid = curve_grid(lo, hi, 201);
        let summary = posterior_summary(&fit.draws, &fit.basis, spec.level, &grid)?;
        let truth_curve: Vec<f64> = grid.iter().map(|&x| data.scale * truth.raw(x)).collect();
        let baseline_curve = fit.basis.design_matrix(&grid)?.values * base_beta;
        Some(PlotPayload {
            grid,
            mean: summary.mean,
            lower: summary.lower,
            upper: summary.upper,
            truth: truth_curve,
            baseline: baseline_curve.as_slice().to_vec(),
            draws: spec.save_draws.then(|| fit.draws.clone()),
        })
    } else {
        None
    };

    Ok((
        ReplicateMetrics {
            replicate: rep,
            mse_fhs_x100: 100.0 * mse_fhs,
            mse_baseline_x100: 100.0 * mse_base,
            omega_mean: fit.draws.omega_mean(),
            sigma2_mean: fit.draws.sigma2_mean(),
            mcc: None,
            true_model_selected: None,
            n_spurious_selected: None,
            test_error: None,
            failed: false,
        },
        payload,
    ))
}

fn run_density_rep(
    spec: &SimulationSpec,
    cfg: &FhsConfig,
    rep: usize,
    data_seed: u64,
    want_plot: bool,
) -> Result<RepOut> {
    let truth = DensityTruth::parse(&spec.truth)?;
    let y = gen_density(truth, spec.n, data_seed);
    let mh = MhSettings::default();
    let fit = fit_logspline(&y, cfg, &mh)?;
    let mut flat_cfg = cfg.clone();
    flat_cfg.seed = derive_seed(cfg.seed, 0x0f1a7);
    let flat = fit_logspline_flat(&y, &flat_cfg, &mh)?;

    // log-density MSE at the sample points after mean-gauge alignment
    let f_true: Vec<f64> = y.iter().map(|&v| truth.log_pdf(v)).collect();
    let fhat = fit.mean_log_density_unnormalized(&y)?;
    let log_z = fit.model.log_normalizer(&fit.draws.beta_mean());
    let fhat: Vec<f64> = fhat.iter().map(|v| v - log_z).collect();
    let mse_fhs = gauge_aligned_mse(&fhat, &f_true)?;

    let bhat = flat.mean_log_density_unnormalized(&y)?;
    let log_zb = flat.model.log_normalizer(&flat.draws.beta_mean());
    let bhat: Vec<f64> = bhat.iter().map(|v| v - log_zb).collect();
    let mse_base = gauge_aligned_mse(&bhat, &f_true)?;

    let payload = if want_plot {
        let grid = fit.model.quad_nodes.clone();
        let mean_density = fit.model.density_on_grid(&fit.draws.beta_mean());
        // pointwise band of the density over a thinned set of draws
        let step = (fit.draws.n_kept() / 400).max(1);
        let mut per_point: Vec<Vec<f64>> = vec![Vec::new(); grid.len()];
        for r in (0..fit.draws.n_kept()).step_by(step) {
            let beta = fit.draws.betas.row(r).transpose();
            for (g, d) in fit.model.density_on_grid(&beta).into_iter().enumerate() {
                per_point[g].push(d);
            }
        }
        let mut lower = Vec::with_capacity(grid.len());
        let mut upper = Vec::with_capacity(grid.len());
        for vals in per_point.iter_mut() {
            let (l, u) = crate::sampler::equal_tailed_interval(vals, spec.level);
            lower.push(l);
            upper.push(u);
        }
        let truth_curve: Vec<f64> = grid.iter().map(|&t| truth.log_pdf(t).exp()).collect();
        let baseline_curve = flat.model.density_on_grid(&flat.draws.beta_mean());
        Some(PlotPayload {
            grid,
            mean: mean_density,
            lower,
            upper,
            truth: truth_curve,
            baseline: baseline_curve,
            draws: spec.save_draws.then(|| fit.draws.clone()),
        })
    } else {
        None
    };

    Ok((
        ReplicateMetrics {
            replicate: rep,
            mse_fhs_x100: 100.0 * mse_fhs,
            mse_baseline_x100: 100.0 * mse_base,
            omega_mean: fit.draws.omega_mean(),
            sigma2_mean: 1.0,
            mcc: None,
            true_model_selected: None,
            n_spurious_selected: None,
            test_error: None,
            failed: false,
        },
        payload,
    ))
}

fn run_additive_rep(
    spec: &SimulationSpec,
    cfg: &FhsConfig,
    rep: usize,
    setting: u8,
    p_override: Option<usize>,
    data_seed: u64,
) -> Result<RepOut> {
    let data = gen_additive_setting(setting, spec.n, p_override, data_seed)?;
    let design = AdditiveDesign::from_columns(&data.x, &data.y, cfg.k_n, cfg.degree)?;
    let draws = backfit_chain(&design, cfg)?;

    // posterior mean of the total fit
    let n = design.n();
    let n_kept = draws.n_kept();
    let mut mean_total = DVector::from_element(n, draws.intercept);
    for (j, comp) in design.components.iter().enumerate() {
        let mean_beta = DVector::from_fn(comp.n_coef(), |c, _| {
            draws.components[j].betas.column(c).sum() / n_kept as f64
        });
        mean_total += comp.design() * mean_beta;
    }
    let mse_fhs = empirical_mse(mean_total.as_slice(), &data.f_total)?;

    // unpenalized backfitting least squares as the reference
    let ls = backfit_least_squares(&design, 100);
    let mut ls_total = DVector::from_element(n, design.intercept);
    for (j, comp) in design.components.iter().enumerate() {
        ls_total += comp.design() * &ls[j];
    }
    let mse_base = empirical_mse(ls_total.as_slice(), &data.f_total)?;

    let sel = select_components(&draws, &design, spec.level, 101)?;
    let (tp, tn, fp, fn_) = sel.confusion(&data.active);
    let mcc_val = crate::additive::mcc(tp, tn, fp, fn_);
    let spurious = fp as f64;
    let true_model = fp == 0 && fn_ == 0;
    let omega_mean = draws
        .components
        .iter()
        .map(|c| c.omegas.iter().sum::<f64>() / c.omegas.len() as f64)
        .sum::<f64>()
        / design.p() as f64;
    let sigma2_mean = draws.sigma2s.iter().sum::<f64>() / draws.sigma2s.len() as f64;

    Ok((
        ReplicateMetrics {
            replicate: rep,
            mse_fhs_x100: 100.0 * mse_fhs,
            mse_baseline_x100: 100.0 * mse_base,
            omega_mean,
            sigma2_mean,
            mcc: Some(mcc_val),
            true_model_selected: Some(true_model),
            n_spurious_selected: Some(spurious),
            test_error: None,
            failed: false,
        },
        None,
    ))
}
