//! CSV input and output. All floats are written with Rust's shortest
//! round-trip formatting, so identical runs produce byte-identical
//! files and readers recover the exact values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::additive::SelectionResult;
use crate::error::{FhsError, Result};
use crate::sampler::ChainDraws;

use super::metrics::{MetricsReport, ReplicateMetrics};

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fmt_opt_bool(v: Option<bool>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_per_replicate_csv(path: &Path, reps: &[ReplicateMetrics]) -> Result<()> {
    let mut out = String::new();
    out.push_str(
        "replicate,mse_fhs_x100,mse_baseline_x100,omega_mean,sigma2_mean,mcc,true_model_selected,n_spurious_selected,test_error,failed\n",
    );
    for r in reps {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.replicate,
            r.mse_fhs_x100,
            r.mse_baseline_x100,
            r.omega_mean,
            r.sigma2_mean,
            fmt_opt(r.mcc),
            fmt_opt_bool(r.true_model_selected),
            fmt_opt(r.n_spurious_selected),
            fmt_opt(r.test_error),
            r.failed
        )
        .expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_per_replicate_csv(path: &Path) -> Result<Vec<ReplicateMetrics>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| FhsError::Data(format!("missing column {i}")))?
                .parse::<f64>()
                .map_err(|e| FhsError::Data(format!("bad float in column {i}: {e}")))
        };
        let parse_opt = |i: usize| -> Option<f64> {
            rec.get(i)
                .filter(|s| !s.is_empty())
                .and_then(|s| s.parse().ok())
        };
        out.push(ReplicateMetrics {
            replicate: rec
                .get(0)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| FhsError::Data("bad replicate index".into()))?,
            mse_fhs_x100: parse(1)?,
            mse_baseline_x100: parse(2)?,
            omega_mean: parse(3)?,
            sigma2_mean: parse(4)?,
            mcc: parse_opt(5),
            true_model_selected: rec
                .get(6)
                .filter(|s| !s.is_empty())
                .and_then(|s| s.parse().ok()),
            n_spurious_selected: parse_opt(7),
            test_error: parse_opt(8),
            failed: rec.get(9).map(|s| s == "true").unwrap_or(false),
        });
    }
    Ok(out)
}

pub fn write_aggregate_csv(path: &Path, report: &MetricsReport) -> Result<()> {
    let mut out = String::new();
    out.push_str("metric,value\n");
    let mut kv = |k: &str, v: String| writeln!(out, "{k},{v}").expect("string write");
    kv("replicates", report.per_replicate.len().to_string());
    kv("failures", report.failures.to_string());
    kv("mse_fhs_x100_mean", report.mse_fhs_x100_mean.to_string());
    kv("mse_fhs_x100_sd", report.mse_fhs_x100_sd.to_string());
    kv(
        "mse_baseline_x100_mean",
        report.mse_baseline_x100_mean.to_string(),
    );
    kv(
        "mse_baseline_x100_sd",
        report.mse_baseline_x100_sd.to_string(),
    );
    kv("omega_mean", report.omega_mean.to_string());
    kv("mcc_mean", fmt_opt(report.mcc_mean));
    kv(
        "true_model_proportion",
        fmt_opt(report.true_model_proportion),
    );
    kv("spurious_mean", fmt_opt(report.spurious_mean));
    kv("test_error_mean", fmt_opt(report.test_error_mean));
    kv("test_error_sd", fmt_opt(report.test_error_sd));
    kv(
        "modal_model",
        report.modal_model.clone().unwrap_or_default(),
    );
    fs::write(path, out)?;
    Ok(())
}

/// One row per kept iteration: beta_1..beta_k, omega, sigma2.
pub fn write_draws_csv(path: &Path, draws: &ChainDraws) -> Result<()> {
    let k = draws.betas.ncols();
    let mut out = String::new();
    for j in 0..k {
        write!(out, "beta_{},", j + 1).expect("string write");
    }
    out.push_str("omega,sigma2\n");
    for r in 0..draws.n_kept() {
        for j in 0..k {
            write!(out, "{},", draws.betas[(r, j)]).expect("string write");
        }
        writeln!(out, "{},{}", draws.omegas[r], draws.sigma2s[r]).expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Selection report: one row per component with its decision and band
/// geometry.
pub fn write_selection_report(path: &Path, sel: &SelectionResult, names: &[String]) -> Result<()> {
    let mut out = String::new();
    out.push_str("component,included,max_abs_band_center,mean_band_width\n");
    for (j, band) in sel.bands.iter().enumerate() {
        let name = names
            .get(j)
            .cloned()
            .unwrap_or_else(|| format!("component_{}", band.id));
        writeln!(
            out,
            "{name},{},{},{}",
            sel.included[j],
            band.max_abs_center(),
            band.mean_width()
        )
        .expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a numeric CSV with a header row; returns column names and
/// columns. Non-numeric cells are an error naming the offending row and
/// column.
pub fn read_numeric_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (row_idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != headers.len() {
            return Err(FhsError::Data(format!(
                "row {} has {} fields, header has {}",
                row_idx + 2,
                rec.len(),
                headers.len()
            )));
        }
        for (col_idx, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                FhsError::Data(format!(
                    "non-numeric cell at row {}, column '{}': '{}'",
                    row_idx + 2,
                    headers[col_idx],
                    field
                ))
            })?;
            columns[col_idx].push(v);
        }
    }
    Ok((headers, columns))
}
