//! Real-data workflow: ingest a CSV, standardize response and
//! covariates with training-split statistics, append spurious Gaussian
//! covariates, and repeat random test splits of an additive fit to
//! report held-out error, the spurious-selection count, and the modal
//! selected model.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::additive::{backfit_chain, select_components, AdditiveDesign};
use crate::error::{FhsError, Result};
use crate::sampler::{derive_seed, FhsConfig};

use super::csvio::{read_numeric_csv, write_per_replicate_csv};
use super::datagen::spurious_columns;
use super::metrics::{MetricsReport, ReplicateMetrics};

#[derive(Debug, Clone)]
pub struct RealDataOptions {
    pub response: String,
    /// Empty means: every other column.
    pub covariates: Vec<String>,
    pub spurious: usize,
    pub test_size: usize,
    pub folds: usize,
    pub level: f64,
}

impl Default for RealDataOptions {
    fn default() -> Self {
        Self {
            response: String::new(),
            covariates: Vec::new(),
            spurious: 40,
            test_size: 30,
            folds: 20,
            level: 0.95,
        }
    }
}

pub fn run_realdata(
    csv_path: &Path,
    opts: &RealDataOptions,
    cfg: &FhsConfig,
    out_dir: &Path,
) -> Result<MetricsReport> {
    cfg.validate()?;
    if opts.folds == 0 {
        return Err(FhsError::InvalidConfig("need at least one fold".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let (headers, columns) = read_numeric_csv(csv_path)?;
    let resp_idx = headers
        .iter()
        .position(|h| h == &opts.response)
        .ok_or_else(|| FhsError::Data(format!("response column '{}' not found", opts.response)))?;
    let y_raw = columns[resp_idx].clone();
    let n = y_raw.len();
    if n < 10 {
        return Err(FhsError::Data(format!("too few rows ({n})")));
    }
    if opts.test_size >= n {
        return Err(FhsError::InvalidConfig(format!(
            "test size {} must be smaller than the sample size {n}",
            opts.test_size
        )));
    }

    // covariate selection, preserving the requested order
    let mut names: Vec<String> = Vec::new();
    let mut cov_cols: Vec<Vec<f64>> = Vec::new();
    let wanted: Vec<String> = if opts.covariates.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != resp_idx)
            .map(|(_, h)| h.clone())
            .collect()
    } else {
        opts.covariates.clone()
    };
    let mut warnings = Vec::new();
    for name in wanted {
        let idx = headers
            .iter()
            .position(|h| h == &name)
            .ok_or_else(|| FhsError::Data(format!("covariate column '{name}' not found")))?;
        let col = &columns[idx];
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            warnings.push(format!("dropping constant column '{name}'"));
            continue;
        }
        names.push(name);
        cov_cols.push(col.clone());
    }
    if cov_cols.is_empty() {
        return Err(FhsError::Data("no usable covariate columns".into()));
    }
    let n_original = cov_cols.len();

    // spurious standard Gaussian covariates, generated once
    for (s, col) in spurious_columns(n, opts.spurious, derive_seed(cfg.seed, 0xadd))
        .into_iter()
        .enumerate()
    {
        names.push(format!("spurious_{}", s + 1));
        cov_cols.push(col);
    }

    let fold_results: Vec<Result<FoldOutcome>> = (0..opts.folds)
        .into_par_iter()
        .map(|fold| run_fold(fold, &y_raw, &cov_cols, n_original, opts, cfg))
        .collect();

    let mut reps = Vec::with_capacity(opts.folds);
    let mut model_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut selection_counts = vec![0usize; cov_cols.len()];
    let mut ok_folds = 0usize;
    for (fold, res) in fold_results.into_iter().enumerate() {
        match res {
            Ok(out) => {
                *model_counts.entry(out.model_key.clone()).or_insert(0) += 1;
                for (j, sel) in out.selected.iter().enumerate() {
                    if *sel {
                        selection_counts[j] += 1;
                    }
                }
                ok_folds += 1;
                reps.push(out.metrics);
            }
            Err(_) => reps.push(ReplicateMetrics::failed(fold)),
        }
    }

    let mut report = MetricsReport::from_replicates(reps);
    report.modal_model = model_counts
        .into_iter()
        .max_by_key(|(_, c)| *c)
        .map(|(m, _)| m);

    write_per_replicate_csv(&out_dir.join("folds.csv"), &report.per_replicate)?;
    super::csvio::write_aggregate_csv(&out_dir.join("summary.csv"), &report)?;
    let mut sel_out = String::from("covariate,is_spurious,selected_fraction\n");
    for (j, name) in names.iter().enumerate() {
        writeln!(
            sel_out,
            "{name},{},{}",
            j >= n_original,
            selection_counts[j] as f64 / ok_folds.max(1) as f64
        )
        .expect("string write");
    }
    std::fs::write(out_dir.join("selection_counts.csv"), sel_out)?;
    if !warnings.is_empty() {
        std::fs::write(out_dir.join("warnings.txt"), warnings.join("\n"))?;
        for w in &warnings {
            eprintln!("warning: {w}");
        }
    }
    Ok(report)
}

struct FoldOutcome {
    metrics: ReplicateMetrics,
    selected: Vec<bool>,
    model_key: String,
}

fn run_fold(
    fold: usize,
    y_raw: &[f64],
    cov_cols: &[Vec<f64>],
    n_original: usize,
    opts: &RealDataOptions,
    cfg: &FhsConfig,
) -> Result<FoldOutcome> {
    let n = y_raw.len();
    let split_seed = derive_seed(cfg.seed, 1000 + fold as u64);
    let (train_idx, test_idx) = split_indices(n, opts.test_size, split_seed);

    // standardize with training statistics only
    let stats = |col: &[f64], idx: &[usize]| -> (f64, f64) {
        let m = idx.iter().map(|&i| col[i]).sum::<f64>() / idx.len() as f64;
        let v = idx
            .iter()
            .map(|&i| (col[i] - m) * (col[i] - m))
            .sum::<f64>()
            / (idx.len() - 1).max(1) as f64;
        (m, v.sqrt().max(1e-12))
    };
    let (ym, ysd) = stats(y_raw, &train_idx);
    let y_train: Vec<f64> = train_idx.iter().map(|&i| (y_raw[i] - ym) / ysd).collect();
    let y_test: Vec<f64> = test_idx.iter().map(|&i| (y_raw[i] - ym) / ysd).collect();
    let mut train_cols = Vec::with_capacity(cov_cols.len());
    let mut test_cols = Vec::with_capacity(cov_cols.len());
    for col in cov_cols {
        let (m, sd) = stats(col, &train_idx);
        train_cols.push(
            train_idx
                .iter()
                .map(|&i| (col[i] - m) / sd)
                .collect::<Vec<f64>>(),
        );
        test_cols.push(
            test_idx
                .iter()
                .map(|&i| (col[i] - m) / sd)
                .collect::<Vec<f64>>(),
        );
    }

    let design = AdditiveDesign::from_columns(&train_cols, &y_train, cfg.k_n, cfg.degree)?;
    let mut fold_cfg = cfg.clone();
    fold_cfg.seed = derive_seed(cfg.seed, 5000 + fold as u64);
    let draws = backfit_chain(&design, &fold_cfg)?;
    let sel = select_components(&draws, &design, opts.level, 101)?;

    // held-out prediction: intercept + sum of selected-or-not component
    // fits at the (clamped) test covariates
    let test_error = if test_idx.is_empty() {
        None
    } else {
        let n_kept = draws.n_kept();
        let mut pred = vec![draws.intercept; test_idx.len()];
        for (j, comp) in design.components.iter().enumerate() {
            let (lo, hi) = comp.basis.domain();
            let clamped: Vec<f64> = test_cols[j].iter().map(|&x| x.clamp(lo, hi)).collect();
            let grid_rows = comp.eval_grid(&clamped)?;
            let mean_beta = DVector::from_fn(comp.n_coef(), |c, _| {
                draws.components[j].betas.column(c).sum() / n_kept as f64
            });
            let fit = grid_rows * mean_beta;
            for (t, f) in pred.iter_mut().zip(fit.iter()) {
                *t += f;
            }
        }
        let err = pred
            .iter()
            .zip(y_test.iter())
            .map(|(p, y)| (p - y) * (p - y))
            .sum::<f64>()
            / y_test.len() as f64;
        Some(err)
    };

    let n_spurious_selected = sel.included[n_original..].iter().filter(|&&b| b).count() as f64;
    let selected_names: Vec<String> = sel
        .included
        .iter()
        .take(n_original)
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(j, _)| format!("c{j}"))
        .collect();
    let omega_mean = draws
        .components
        .iter()
        .map(|c| c.omegas.iter().sum::<f64>() / c.omegas.len() as f64)
        .sum::<f64>()
        / design.p() as f64;

    Ok(FoldOutcome {
        metrics: ReplicateMetrics {
            replicate: fold,
            mse_fhs_x100: f64::NAN,
            mse_baseline_x100: f64::NAN,
            omega_mean,
            sigma2_mean: draws.sigma2s.iter().sum::<f64>() / draws.sigma2s.len() as f64,
            mcc: None,
            true_model_selected: None,
            n_spurious_selected: Some(n_spurious_selected),
            test_error,
            failed: false,
        },
        selected: sel.included.clone(),
        model_key: selected_names.join("+"),
    })
}

/// Deterministic test/train split: a seeded partial Fisher-Yates pick of
/// `test_size` indices.
fn split_indices(n: usize, test_size: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..test_size.min(n) {
        let j = i + (rng.random::<u64>() as usize) % (n - i);
        idx.swap(i, j);
    }
    let mut test: Vec<usize> = idx[..test_size].to_vec();
    let mut train: Vec<usize> = idx[test_size..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn synthetic_csv(dir: &Path, n: usize) -> std::path::PathBuf {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let path = dir.join("data.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "x1,x2,flat,target").unwrap();
        for _ in 0..n {
            let x1 = rng.random::<f64>() * 4.0 - 2.0;
            let x2 = rng.random::<f64>() * 4.0 - 2.0;
            let y = x1.sin() * 2.0 + 0.5 * x2 + 0.3 * rng.random::<f64>();
            writeln!(f, "{x1},{x2},1.0,{y}").unwrap();
        }
        path
    }

    fn quick_cfg() -> FhsConfig {
        FhsConfig {
            n_iter: 500,
            n_burnin: 200,
            seed: 21,
            ..FhsConfig::default()
        }
    }

    #[test]
    fn full_data_single_fit_when_no_test_split() {
        let dir = tempfile::tempdir().unwrap();
        let csv = synthetic_csv(dir.path(), 120);
        let opts = RealDataOptions {
            response: "target".into(),
            spurious: 0,
            test_size: 0,
            folds: 1,
            ..RealDataOptions::default()
        };
        let report = run_realdata(&csv, &opts, &quick_cfg(), dir.path()).unwrap();
        assert_eq!(report.per_replicate.len(), 1);
        assert!(report.test_error_mean.is_none());
        // constant column was dropped with a warning file
        assert!(dir.path().join("warnings.txt").exists());
    }

    #[test]
    fn split_sequence_is_deterministic() {
        let (tr1, te1) = split_indices(100, 25, 7);
        let (tr2, te2) = split_indices(100, 25, 7);
        assert_eq!(tr1, tr2);
        assert_eq!(te1, te2);
        assert_eq!(te1.len(), 25);
        assert_eq!(tr1.len(), 75);
        // disjoint and covering
        let mut all: Vec<usize> = tr1.iter().chain(te1.iter()).cloned().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn spurious_columns_are_counted() {
        let dir = tempfile::tempdir().unwrap();
        let csv = synthetic_csv(dir.path(), 150);
        let opts = RealDataOptions {
            response: "target".into(),
            spurious: 5,
            test_size: 20,
            folds: 2,
            ..RealDataOptions::default()
        };
        let report = run_realdata(&csv, &opts, &quick_cfg(), dir.path()).unwrap();
        assert!(report.spurious_mean.is_some());
        assert!(report.test_error_mean.is_some());
        assert!(dir.path().join("selection_counts.csv").exists());
        let sel = std::fs::read_to_string(dir.path().join("selection_counts.csv")).unwrap();
        assert!(sel.contains("spurious_5"));
    }

    #[test]
    fn missing_response_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let csv = synthetic_csv(dir.path(), 50);
        let opts = RealDataOptions {
            response: "nope".into(),
            ..RealDataOptions::default()
        };
        match run_realdata(&csv, &opts, &quick_cfg(), dir.path()).unwrap_err() {
            FhsError::Data(msg) => assert!(msg.contains("nope")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
