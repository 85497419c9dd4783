use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fhs::additive::{backfit_chain, select_components, AdditiveDesign};
use fhs::basis::BSplineBasis;
use fhs::error::FhsError;
use fhs::extmodels::gp::{gp_prior_sample, GpShrinkagePrior, Kernel};
use fhs::extmodels::logspline::{fit_logspline, MhSettings};
use fhs::extmodels::vc::{fit_varying_coefficient, VaryingCoefficientData};
use fhs::harness::config::parse_config_file;
use fhs::harness::csvio::{read_numeric_csv, write_draws_csv, write_selection_report};
use fhs::harness::svg::{write_line_plot, Band, Series};
use fhs::harness::{run_experiment, run_realdata, ModelKind, RealDataOptions, SimulationSpec};
use fhs::projection::{NullBasis, ShrinkageDesign};
use fhs::sampler::{posterior_summary, run_chain, FhsConfig, ShrinkageScale, Sigma2Prior};
use fhs::Result;

/// Functional horseshoe shrinkage for nonparametric regression.
#[derive(Parser)]
#[command(name = "fhs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a univariate model (simple regression, varying-coefficient, or density) from a CSV.
    Fit(FitArgs),
    /// Fit an additive model with per-component shrinkage and report selected components.
    FitAdditive(FitAdditiveArgs),
    /// Draw sample paths from the shrinkage Gaussian-process prior.
    SampleGp(SampleGpArgs),
    /// Run a replicated simulation experiment.
    Simulate(SimulateArgs),
    /// Cross-validated additive fit of a real data set with spurious-variable augmentation.
    Realdata(RealdataArgs),
}

#[derive(Args, Clone)]
struct SamplerArgs {
    /// Number of spline basis functions.
    #[arg(long, default_value_t = 8)]
    kn: usize,
    /// Spline degree.
    #[arg(long, default_value_t = 3)]
    degree: usize,
    /// Beta shape of the shrinkage factor near 0.
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    /// Beta shape near 1: a number, or `auto` for exp(-kn ln n / 2).
    #[arg(long, default_value = "auto")]
    b: String,
    #[arg(long, default_value_t = 30000)]
    iters: usize,
    #[arg(long, default_value_t = 10000)]
    burnin: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fix the noise variance instead of updating it.
    #[arg(long)]
    fixed_sigma2: Option<f64>,
}

impl SamplerArgs {
    fn to_config(&self) -> Result<FhsConfig> {
        let b = if self.b.eq_ignore_ascii_case("auto") {
            ShrinkageScale::Auto
        } else {
            let v: f64 = self
                .b
                .parse()
                .map_err(|_| FhsError::InvalidConfig(format!("cannot parse b = '{}'", self.b)))?;
            ShrinkageScale::Fixed(v)
        };
        let cfg = FhsConfig {
            a: self.a,
            b,
            k_n: self.kn,
            degree: self.degree,
            sigma2_prior: match self.fixed_sigma2 {
                Some(v) => Sigma2Prior::Fixed(v),
                None => Sigma2Prior::InverseGamma {
                    shape: 0.01,
                    rate: 0.01,
                },
            },
            n_iter: self.iters,
            n_burnin: self.burnin,
            seed: self.seed,
            ..FhsConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, value_parser = ["simple", "vc", "density"])]
    model: String,
    #[arg(long)]
    data: PathBuf,
    /// Covariate column (simple, vc).
    #[arg(long)]
    x: Option<String>,
    /// Response / sample column.
    #[arg(long)]
    y: String,
    /// Multiplier column (vc only).
    #[arg(long)]
    w: Option<String>,
    /// Null space to shrink towards (simple model; vc always uses
    /// constants, density always uses quadratics).
    #[arg(long, default_value = "linear", value_parser = ["constant", "linear", "quadratic"])]
    null: String,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    save_draws: bool,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Args)]
struct FitAdditiveArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    response: String,
    /// Comma-separated covariate columns; default: all other columns.
    #[arg(long, value_delimiter = ',')]
    covariates: Vec<String>,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    save_draws: bool,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Args)]
struct SampleGpArgs {
    /// Number of uniform covariate locations on (-pi, pi).
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value = "exponential", value_parser = ["exponential", "squared-exponential"])]
    kernel: String,
    /// Null space: `linear` or `piecewise` (piecewise linear with knots at -1 and 1).
    #[arg(long, default_value = "linear", value_parser = ["linear", "piecewise"])]
    null: String,
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    /// Beta shape near 1; `auto` means n^-2.
    #[arg(long, default_value = "auto")]
    b: String,
    #[arg(long, default_value_t = 5)]
    paths: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Flat key-value config file with [simulate] and [sampler] sections;
    /// explicit flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    truth: Option<String>,
    /// Additive setting id (1-3) when model = additive.
    #[arg(long)]
    setting: Option<u8>,
    /// Override the number of additive components.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    kn: Option<usize>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write replicate 0's kept draws to draws.csv.
    #[arg(long)]
    save_draws: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RealdataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    response: String,
    #[arg(long, value_delimiter = ',')]
    covariates: Vec<String>,
    #[arg(long, default_value_t = 40)]
    spurious: usize,
    #[arg(long, default_value_t = 30)]
    test_size: usize,
    #[arg(long, default_value_t = 20)]
    folds: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    sampler: SamplerArgs,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::FitAdditive(args) => cmd_fit_additive(args),
        Command::SampleGp(args) => cmd_sample_gp(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Realdata(args) => cmd_realdata(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn get_column<'a>(headers: &[String], cols: &'a [Vec<f64>], name: &str) -> Result<&'a Vec<f64>> {
    headers
        .iter()
        .position(|h| h == name)
        .map(|i| &cols[i])
        .ok_or_else(|| FhsError::Data(format!("column '{name}' not found")))
}

fn write_summary_csv(
    path: &Path,
    grid: &[f64],
    mean: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Result<()> {
    let mut out = String::from("x,mean,lower,upper\n");
    for i in 0..grid.len() {
        writeln!(out, "{},{},{},{}", grid[i], mean[i], lower[i], upper[i]).expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let cfg = args.sampler.to_config()?;
    std::fs::create_dir_all(&args.out)?;
    let (headers, cols) = read_numeric_csv(&args.data)?;
    let y = get_column(&headers, &cols, &args.y)?.clone();
    let null = match args.null.as_str() {
        "constant" => NullBasis::Constant,
        "quadratic" => NullBasis::Quadratic,
        _ => NullBasis::Linear,
    };

    match args.model.as_str() {
        "simple" => {
            let xname = args.x.as_ref().ok_or_else(|| {
                FhsError::InvalidConfig("--x is required for --model simple".into())
            })?;
            let x = get_column(&headers, &cols, xname)?.clone();
            if x.len() != y.len() {
                return Err(FhsError::DimensionMismatch("x and y lengths differ".into()));
            }
            let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let basis = BSplineBasis::new(cfg.k_n, cfg.degree, (lo, hi))?;
            let phi = basis.design_matrix(&x)?;
            let design = ShrinkageDesign::new(&phi, null.build(&x))?;
            let yv = DVector::from_vec(y);
            let draws = run_chain(&yv, &design, &cfg)?;
            let grid: Vec<f64> = (0..201)
                .map(|i| lo + (hi - lo) * i as f64 / 200.0)
                .collect();
            let summary = posterior_summary(&draws, &basis, args.level, &grid)?;
            write_summary_csv(
                &args.out.join("fit.csv"),
                &grid,
                &summary.mean,
                &summary.lower,
                &summary.upper,
            )?;
            write_line_plot(
                &args.out.join("fit.svg"),
                "posterior mean fit",
                &[Series {
                    xs: &grid,
                    ys: &summary.mean,
                    color: "crimson",
                    dashed: false,
                    label: "posterior mean",
                }],
                Some(&Band {
                    xs: &grid,
                    lower: &summary.lower,
                    upper: &summary.upper,
                    color: "crimson",
                }),
            )?;
            if args.save_draws {
                write_draws_csv(&args.out.join("draws.csv"), &draws)?;
            }
            println!(
                "fit written to {}; posterior mean shrinkage factor = {:.4}",
                args.out.display(),
                draws.omega_mean()
            );
        }
        "vc" => {
            let xname = args
                .x
                .as_ref()
                .ok_or_else(|| FhsError::InvalidConfig("--x is required for --model vc".into()))?;
            let wname = args
                .w
                .as_ref()
                .ok_or_else(|| FhsError::InvalidConfig("--w is required for --model vc".into()))?;
            let x = get_column(&headers, &cols, xname)?.clone();
            let w = get_column(&headers, &cols, wname)?.clone();
            let data = VaryingCoefficientData::new(y, w, x)?;
            let fit = fit_varying_coefficient(&data, &NullBasis::Constant, &cfg)?;
            let (lo, hi) = fit.basis.domain();
            let grid: Vec<f64> = (0..201)
                .map(|i| lo + (hi - lo) * i as f64 / 200.0)
                .collect();
            let summary = posterior_summary(&fit.draws, &fit.basis, args.level, &grid)?;
            write_summary_csv(
                &args.out.join("fit.csv"),
                &grid,
                &summary.mean,
                &summary.lower,
                &summary.upper,
            )?;
            write_line_plot(
                &args.out.join("fit.svg"),
                "varying-coefficient fit",
                &[Series {
                    xs: &grid,
                    ys: &summary.mean,
                    color: "crimson",
                    dashed: false,
                    label: "posterior mean",
                }],
                Some(&Band {
                    xs: &grid,
                    lower: &summary.lower,
                    upper: &summary.upper,
                    color: "crimson",
                }),
            )?;
            if args.save_draws {
                write_draws_csv(&args.out.join("draws.csv"), &fit.draws)?;
            }
            println!(
                "fit written to {}; posterior mean shrinkage factor = {:.4}",
                args.out.display(),
                fit.draws.omega_mean()
            );
        }
        "density" => {
            let fit = fit_logspline(&y, &cfg, &MhSettings::default())?;
            let grid = fit.model.quad_nodes.clone();
            let mean_density = fit.model.density_on_grid(&fit.draws.beta_mean());
            let mut out = String::from("y,density\n");
            for (g, d) in grid.iter().zip(mean_density.iter()) {
                writeln!(out, "{g},{d}").expect("string write");
            }
            std::fs::write(args.out.join("density.csv"), out)?;
            write_line_plot(
                &args.out.join("fit.svg"),
                "posterior mean density",
                &[Series {
                    xs: &grid,
                    ys: &mean_density,
                    color: "crimson",
                    dashed: false,
                    label: "density",
                }],
                None,
            )?;
            if args.save_draws {
                write_draws_csv(&args.out.join("draws.csv"), &fit.draws)?;
            }
            println!(
                "density written to {}; posterior mean shrinkage factor = {:.4}, MH acceptance = {:.2}",
                args.out.display(),
                fit.draws.omega_mean(),
                fit.acceptance_rate
            );
        }
        other => {
            return Err(FhsError::InvalidConfig(format!("unknown model '{other}'")));
        }
    }
    Ok(())
}

fn cmd_fit_additive(args: FitAdditiveArgs) -> Result<()> {
    let cfg = args.sampler.to_config()?;
    std::fs::create_dir_all(&args.out)?;
    let (headers, cols) = read_numeric_csv(&args.data)?;
    let y = get_column(&headers, &cols, &args.response)?.clone();
    let names: Vec<String> = if args.covariates.is_empty() {
        headers
            .iter()
            .filter(|h| *h != &args.response)
            .cloned()
            .collect()
    } else {
        args.covariates.clone()
    };
    let mut columns = Vec::with_capacity(names.len());
    for name in &names {
        columns.push(get_column(&headers, &cols, name)?.clone());
    }
    let design = AdditiveDesign::from_columns(&columns, &y, cfg.k_n, cfg.degree)?;
    let draws = backfit_chain(&design, &cfg)?;
    let sel = select_components(&draws, &design, args.level, 101)?;
    write_selection_report(&args.out.join("selection.csv"), &sel, &names)?;
    if args.save_draws {
        for (j, comp) in draws.components.iter().enumerate() {
            let mut out = String::new();
            for c in 0..comp.betas.ncols() {
                write!(out, "beta_{},", c + 1).expect("string write");
            }
            out.push_str("omega\n");
            for r in 0..comp.betas.nrows() {
                for c in 0..comp.betas.ncols() {
                    write!(out, "{},", comp.betas[(r, c)]).expect("string write");
                }
                writeln!(out, "{}", comp.omegas[r]).expect("string write");
            }
            std::fs::write(args.out.join(format!("draws_{}.csv", names[j])), out)?;
        }
    }
    let selected: Vec<&str> = names
        .iter()
        .zip(sel.included.iter())
        .filter(|(_, &inc)| inc)
        .map(|(n, _)| n.as_str())
        .collect();
    println!(
        "selected {} of {} components: {}",
        selected.len(),
        names.len(),
        selected.join(", ")
    );
    Ok(())
}

fn cmd_sample_gp(args: SampleGpArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let kernel = match args.kernel.as_str() {
        "squared-exponential" => Kernel::SquaredExponential,
        _ => Kernel::Exponential,
    };
    let b = if args.b.eq_ignore_ascii_case("auto") {
        1.0 / (args.n as f64 * args.n as f64)
    } else {
        args.b
            .parse()
            .map_err(|_| FhsError::InvalidConfig(format!("cannot parse b = '{}'", args.b)))?
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    use rand::Rng as _;
    let mut xs: Vec<f64> = (0..args.n)
        .map(|_| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * rng.random::<f64>())
        .collect();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let null = match args.null.as_str() {
        "piecewise" => {
            let cols = nalgebra::DMatrix::from_fn(xs.len(), 4, |i, j| {
                let x = xs[i];
                match j {
                    0 => 1.0,
                    1 => (x + 1.0).max(0.0),
                    2 => (-x - 1.0).max(0.0),
                    _ => (x - 1.0).max(0.0),
                }
            });
            NullBasis::Custom(cols)
        }
        _ => NullBasis::Linear,
    };
    let prior = GpShrinkagePrior::new(kernel, null, args.a, b);
    let paths = gp_prior_sample(&prior, &xs, args.paths, &mut rng)?;

    let mut out = String::from("x");
    for p in 0..args.paths {
        write!(out, ",path_{}", p + 1).expect("string write");
    }
    out.push('\n');
    for (i, &x) in xs.iter().enumerate() {
        write!(out, "{x}").expect("string write");
        for p in 0..args.paths {
            write!(out, ",{}", paths[(p, i)]).expect("string write");
        }
        out.push('\n');
    }
    std::fs::write(args.out.join("gp_paths.csv"), out)?;

    let colors = [
        "crimson",
        "steelblue",
        "seagreen",
        "darkorange",
        "purple",
        "teal",
    ];
    let rows: Vec<Vec<f64>> = (0..args.paths.min(6))
        .map(|p| paths.row(p).iter().cloned().collect())
        .collect();
    let series: Vec<Series<'_>> = rows
        .iter()
        .enumerate()
        .map(|(p, ys)| Series {
            xs: &xs,
            ys,
            color: colors[p % colors.len()],
            dashed: false,
            label: "",
        })
        .collect();
    write_line_plot(
        &args.out.join("gp_paths.svg"),
        "shrinkage GP prior paths",
        &series,
        None,
    )?;
    println!("wrote {} paths to {}", args.paths, args.out.display());
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    // file values fill in what the flags leave unset
    let file = match &args.config {
        Some(p) => parse_config_file(p)?,
        None => Default::default(),
    };
    let from_file = |key: &str| -> Option<String> { file.get(key).cloned() };
    let parse_num = |s: String, key: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| FhsError::InvalidConfig(format!("cannot parse {key} = '{s}'")))
    };

    let model_name = args
        .model
        .or_else(|| from_file("simulate.model"))
        .ok_or_else(|| FhsError::InvalidConfig("missing --model (or simulate.model)".into()))?;
    let truth = args
        .truth
        .or_else(|| from_file("simulate.truth"))
        .unwrap_or_default();
    let setting = match args.setting {
        Some(s) => Some(s),
        None => from_file("simulate.setting")
            .map(|s| {
                s.parse::<u8>()
                    .map_err(|_| FhsError::InvalidConfig(format!("bad setting '{s}'")))
            })
            .transpose()?,
    };
    let p_override = match args.p {
        Some(p) => Some(p),
        None => from_file("simulate.p")
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|_| FhsError::InvalidConfig(format!("bad p '{s}'")))
            })
            .transpose()?,
    };
    let n = match args.n {
        Some(n) => n,
        None => from_file("simulate.n")
            .map(|s| parse_num(s, "n"))
            .transpose()?
            .unwrap_or(200.0) as usize,
    };
    let replicates = match args.replicates {
        Some(r) => r,
        None => from_file("simulate.replicates")
            .map(|s| parse_num(s, "replicates"))
            .transpose()?
            .unwrap_or(20.0) as usize,
    };
    let snr = match args.snr {
        Some(s) => s,
        None => from_file("simulate.snr")
            .map(|s| parse_num(s, "snr"))
            .transpose()?
            .unwrap_or(1.0),
    };
    let level = match args.level {
        Some(l) => l,
        None => from_file("simulate.level")
            .map(|s| parse_num(s, "level"))
            .transpose()?
            .unwrap_or(0.95),
    };
    let master_seed = match args.seed {
        Some(s) => s,
        None => from_file("simulate.seed")
            .map(|s| {
                s.parse::<u64>()
                    .map_err(|_| FhsError::InvalidConfig(format!("bad seed '{s}'")))
            })
            .transpose()?
            .unwrap_or(0),
    };

    let model = match model_name.as_str() {
        "simple" => ModelKind::Simple,
        "vc" | "varying-coefficient" | "varying_coefficient" => ModelKind::VaryingCoefficient,
        "density" => ModelKind::Density,
        "additive" => ModelKind::Additive {
            setting: setting.ok_or_else(|| {
                FhsError::InvalidConfig("--setting is required for --model additive".into())
            })?,
            p_override,
        },
        other => return Err(FhsError::InvalidConfig(format!("unknown model '{other}'"))),
    };

    let sampler_b = match args.b.or_else(|| from_file("sampler.b")) {
        None => ShrinkageScale::Auto,
        Some(s) if s.eq_ignore_ascii_case("auto") => ShrinkageScale::Auto,
        Some(s) => ShrinkageScale::Fixed(
            s.parse()
                .map_err(|_| FhsError::InvalidConfig(format!("cannot parse b = '{s}'")))?,
        ),
    };
    let cfg = FhsConfig {
        a: match args.a {
            Some(a) => a,
            None => from_file("sampler.a")
                .map(|s| parse_num(s, "a"))
                .transpose()?
                .unwrap_or(0.5),
        },
        b: sampler_b,
        k_n: match args.kn {
            Some(k) => k,
            None => from_file("sampler.kn")
                .map(|s| parse_num(s, "kn"))
                .transpose()?
                .unwrap_or(8.0) as usize,
        },
        degree: match args.degree {
            Some(d) => d,
            None => from_file("sampler.degree")
                .map(|s| parse_num(s, "degree"))
                .transpose()?
                .unwrap_or(3.0) as usize,
        },
        n_iter: match args.iters {
            Some(i) => i,
            None => from_file("sampler.iters")
                .map(|s| parse_num(s, "iters"))
                .transpose()?
                .unwrap_or(30000.0) as usize,
        },
        n_burnin: match args.burnin {
            Some(b) => b,
            None => from_file("sampler.burnin")
                .map(|s| parse_num(s, "burnin"))
                .transpose()?
                .unwrap_or(10000.0) as usize,
        },
        seed: master_seed,
        ..FhsConfig::default()
    };

    let spec = SimulationSpec {
        model,
        truth,
        n,
        replicates,
        snr,
        master_seed,
        level,
        save_draws: args.save_draws,
    };
    let report = run_experiment(&spec, &cfg, &args.out)?;
    println!(
        "{} replicates ({} failed): fHS 100xMSE = {:.4} ({:.4}), baseline = {:.4} ({:.4}), mean shrinkage factor = {:.4}",
        report.per_replicate.len(),
        report.failures,
        report.mse_fhs_x100_mean,
        report.mse_fhs_x100_sd,
        report.mse_baseline_x100_mean,
        report.mse_baseline_x100_sd,
        report.omega_mean,
    );
    if let Some(mcc) = report.mcc_mean {
        println!(
            "selection: mean MCC = {:.4}, true-model proportion = {:.2}, mean spurious = {:.2}",
            mcc,
            report.true_model_proportion.unwrap_or(f64::NAN),
            report.spurious_mean.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

fn cmd_realdata(args: RealdataArgs) -> Result<()> {
    let cfg = args.sampler.to_config()?;
    let opts = RealDataOptions {
        response: args.response,
        covariates: args.covariates,
        spurious: args.spurious,
        test_size: args.test_size,
        folds: args.folds,
        level: args.level,
    };
    let report = run_realdata(&args.data, &opts, &cfg, &args.out)?;
    println!(
        "{} folds ({} failed): test error = {:?} ({:?}), mean spurious selected = {:?}",
        report.per_replicate.len(),
        report.failures,
        report.test_error_mean,
        report.test_error_sd,
        report.spurious_mean,
    );
    if let Some(m) = &report.modal_model {
        println!("modal selected model: {m}");
    }
    Ok(())
}
