//! Subcommands of the `varlp` binary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use varlp::estimators::fit_method;
use varlp::eval::{cross_validate, error_norms, predict_next};
use varlp::io::{read_matrix, read_series, write_matrix, write_series};
use varlp::{
    CvResult, DenseMatrix, ErrorReport, GridPoint, Method, PatternKind, SigmaSpec, TimeSeries,
    SPEC_VERSION,
};

use crate::bench::{
    build_grid, cross_validate_with, run_bench, write_bench, BenchConfig, CvConfig, FULL_REPLICATES,
};
use crate::error::{CliError, CliResult};
use crate::model::{generate_model, generate_series, stack_lags, ModelSpec};

#[derive(Debug, Parser)]
#[command(
    name = "varlp",
    version,
    about = "Sparse VAR estimation by linear programming"
)]
pub struct Cli {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: varlp::Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a model and series from a JSON config and write a bundle.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one estimator to a series.
    Estimate {
        #[arg(long)]
        series: PathBuf,
        #[arg(long, value_parser = parse_method)]
        method: Method,
        #[arg(long)]
        p: Option<usize>,
        /// Tuning value passed to the estimator unchanged.
        #[arg(long, conflicts_with = "cv")]
        lambda: Option<f64>,
        /// Output of `crossval` to take `p` and the tuning value from.
        #[arg(long)]
        cv: Option<PathBuf>,
        /// Bundle directory holding the true `A_k.csv` files.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Keep the highest-variance columns and center them.
    Preprocess {
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        keep: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rolling-origin cross-validation over a grid of (p, lambda).
    Crossval {
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        n1: Option<usize>,
        #[arg(long)]
        n2: Option<usize>,
        /// One-based end of the evaluation range (exclusive); `T + 1` by default.
        #[arg(long)]
        t0: Option<usize>,
        #[arg(long, value_parser = parse_method, default_value = "direct")]
        method: Method,
        #[arg(long)]
        out: PathBuf,
    },
    /// One-step forecasts from a fitted model.
    Predict {
        /// Directory holding `A_1.csv`, `A_2.csv`, ...
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replicated synthetic benchmark.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Run the full replicate count regardless of the config.
        #[arg(long)]
        full_scale: bool,
    },
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn load_series(path: &Path) -> CliResult<TimeSeries> {
    read_series(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn lag_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("A_{k}.csv"))
}

/// Reads `A_1.csv`, `A_2.csv`, ... from `dir` until the first missing file.
pub fn read_lags(dir: &Path) -> CliResult<Vec<DenseMatrix>> {
    let mut lags = Vec::new();
    while lag_path(dir, lags.len() + 1).exists() {
        let path = lag_path(dir, lags.len() + 1);
        let a =
            read_matrix(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if !a.is_square()
            || lags
                .first()
                .is_some_and(|f: &DenseMatrix| f.shape() != a.shape())
        {
            return Err(CliError::Input(format!(
                "{}: lag matrices must be d × d",
                path.display()
            )));
        }
        lags.push(a);
    }
    if lags.is_empty() {
        return Err(CliError::Input(format!("no A_1.csv in {}", dir.display())));
    }
    Ok(lags)
}

fn write_lags(dir: &Path, lags: &[DenseMatrix]) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    lags.iter()
        .enumerate()
        .map(|(k, a)| {
            let path = lag_path(dir, k + 1);
            write_matrix(&path, a)?;
            Ok(path)
        })
        .collect()
}

/// Runs one subcommand and returns the lines to print on success.
pub fn run(command: Command) -> CliResult<Vec<String>> {
    match command {
        Command::Simulate { config, out } => simulate(&config, &out),
        Command::Estimate {
            series,
            method,
            p,
            lambda,
            cv,
            truth,
            out,
        } => estimate(&EstimateArgs {
            series,
            method,
            p,
            lambda,
            cv,
            truth,
            out,
        }),
        Command::Preprocess { series, keep, out } => preprocess(&series, keep, &out),
        Command::Crossval {
            series,
            grid,
            n1,
            n2,
            t0,
            method,
            out,
        } => crossval(&series, &grid, n1, n2, t0, method, &out),
        Command::Predict { model, series, out } => predict(&model, &series, &out),
        Command::Bench {
            config,
            out,
            full_scale,
        } => bench(&config, &out, full_scale),
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct SimulateConfig {
    #[serde(flatten)]
    pub model: ModelSpec,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
struct BundleMeta<'a> {
    spec_version: &'a str,
    d: usize,
    p: usize,
    t_len: usize,
    kappa: f64,
    pattern: PatternKind,
    sigma: SigmaSpec,
    seed: u64,
}

/// Writes `A_k.csv`, `psi.csv`, `series.csv` and `meta.json` into `out`.
pub fn simulate(config: &Path, out: &Path) -> CliResult<Vec<String>> {
    let cfg: SimulateConfig = read_json(config)?;
    let spec = &cfg.model;
    let model = generate_model(spec, cfg.seed)?;
    let ts = generate_series(spec, &model, cfg.seed)?;
    let mut paths = write_lags(out, model.transitions())?;
    let psi = out.join("psi.csv");
    write_matrix(&psi, model.noise_cov())?;
    let series = out.join("series.csv");
    write_series(&series, &ts)?;
    let meta = out.join("meta.json");
    write_json(
        &meta,
        &BundleMeta {
            spec_version: SPEC_VERSION,
            d: spec.d,
            p: spec.p,
            t_len: spec.t_len,
            kappa: spec.kappa,
            pattern: spec.pattern.resolve(spec.d)?,
            sigma: spec.sigma.resolve()?,
            seed: cfg.seed,
        },
    )?;
    paths.extend([psi, series, meta]);
    Ok(paths.iter().map(|p| p.display().to_string()).collect())
}

pub struct EstimateArgs {
    pub series: PathBuf,
    pub method: Method,
    pub p: Option<usize>,
    pub lambda: Option<f64>,
    pub cv: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub out: PathBuf,
}

/// Contents of `report.json`; every method writes the same keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub spec_version: String,
    pub method: Method,
    pub p: usize,
    pub lambda: f64,
    pub column_status: Vec<String>,
    pub infeasible_columns: usize,
    pub wall_time_ms: f64,
    /// Norms of the stacked coefficient error, when `--truth` is given.
    pub errors: Option<ErrorReport>,
    /// Cross-validation run by this command, when neither `--lambda` nor
    /// `--cv` is given.
    pub cv: Option<CvResult>,
}

/// File written by `crossval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub spec_version: String,
    #[serde(flatten)]
    pub result: CvResult,
}

pub fn estimate(args: &EstimateArgs) -> CliResult<Vec<String>> {
    let ts = load_series(&args.series)?;
    let start = Instant::now();
    let (p, lambda, cv) = match (args.lambda, &args.cv) {
        (Some(lambda), _) => (args.p.unwrap_or(1), lambda, None),
        (None, Some(path)) => {
            let report: CvReport = read_json(path)?;
            if report.result.method != args.method {
                return Err(CliError::Config(format!(
                    "{} was tuned for {}, not {}",
                    path.display(),
                    report.result.method,
                    args.method
                )));
            }
            let best = report.result.best;
            if args.p.is_some_and(|p| p != best.p) {
                return Err(CliError::Config(format!(
                    "--p disagrees with the tuned p = {}",
                    best.p
                )));
            }
            (best.p, best.lambda, None)
        }
        (None, None) => {
            let cv = CvConfig {
                p_grid: Some(vec![args.p.unwrap_or(1)]),
                ..CvConfig::default()
            };
            let result = cross_validate_with(args.method, &ts, 1, &cv)?;
            (result.best.p, result.best.lambda, Some(result))
        }
    };
    let fit = fit_method(args.method, &ts, p, lambda)?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let errors = match &args.truth {
        Some(dir) => {
            let truth = read_lags(dir)?;
            if truth[0].rows() != ts.dim() {
                return Err(CliError::Input("truth and series dimensions differ".into()));
            }
            let depth = p.max(truth.len());
            Some(error_norms(
                &stack_lags(&fit.lags, depth)?,
                &stack_lags(&truth, depth)?,
            )?)
        }
        None => None,
    };
    let mut paths = write_lags(&args.out, &fit.lags)?;
    let report_path = args.out.join("report.json");
    write_json(
        &report_path,
        &EstimateReport {
            spec_version: SPEC_VERSION.into(),
            method: args.method,
            p,
            lambda,
            column_status: fit.column_status,
            infeasible_columns: fit.infeasible_columns,
            wall_time_ms,
            errors,
            cv,
        },
    )?;
    paths.push(report_path);
    Ok(paths.iter().map(|p| p.display().to_string()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessManifest {
    pub spec_version: String,
    pub input: String,
    /// Zero-based indices of the kept columns, in their original order.
    pub kept_columns: Vec<usize>,
    pub column_means: Vec<f64>,
    pub column_sds: Vec<f64>,
}

/// Indices of the `keep` columns with the largest standard deviation (ties
/// to the lower index), returned in ascending order, with every column's
/// mean and standard deviation.
pub fn select_columns(ts: &TimeSeries, keep: usize) -> CliResult<(Vec<usize>, Vec<f64>, Vec<f64>)> {
    let (n, d) = (ts.t_len(), ts.dim());
    if keep == 0 || keep > d {
        return Err(CliError::Config(format!(
            "--keep {keep} must be in 1..={d}"
        )));
    }
    if n < 2 {
        return Err(CliError::Input("need at least two observations".into()));
    }
    let mut means = vec![0.0; d];
    for t in 0..n {
        for (m, x) in means.iter_mut().zip(ts.row(t)) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let mut sds = vec![0.0; d];
    for t in 0..n {
        for ((s, x), m) in sds.iter_mut().zip(ts.row(t)).zip(&means) {
            *s += (x - m).powi(2);
        }
    }
    sds.iter_mut()
        .for_each(|s| *s = (*s / (n - 1) as f64).sqrt());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| sds[b].total_cmp(&sds[a]).then(a.cmp(&b)));
    let mut kept = order[..keep].to_vec();
    kept.sort_unstable();
    Ok((kept, means, sds))
}

pub fn preprocess(series: &Path, keep: usize, out: &Path) -> CliResult<Vec<String>> {
    let ts = load_series(series)?;
    let (kept, means, sds) = select_columns(&ts, keep)?;
    let values: Vec<f64> = (0..ts.t_len())
        .flat_map(|t| {
            let row = ts.row(t);
            kept.iter().map(|&j| row[j] - means[j]).collect::<Vec<_>>()
        })
        .collect();
    let centered = TimeSeries::new(ts.t_len(), kept.len(), values)?;
    write_series(out, &centered)?;
    let manifest_path = PathBuf::from(format!("{}.manifest.json", out.display()));
    write_json(
        &manifest_path,
        &PreprocessManifest {
            spec_version: SPEC_VERSION.into(),
            input: series.display().to_string(),
            column_means: kept.iter().map(|&j| means[j]).collect(),
            column_sds: kept.iter().map(|&j| sds[j]).collect(),
            kept_columns: kept,
        },
    )?;
    Ok(vec![
        out.display().to_string(),
        manifest_path.display().to_string(),
    ])
}

/// A grid file: explicit points, a cartesian product, or a product with
/// `lambda` given relative to each `p`'s reference scale.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GridFile {
    Points(Vec<GridPoint>),
    Product {
        p: Vec<usize>,
        lambda: Vec<f64>,
    },
    Relative {
        p: Vec<usize>,
        lambda_relative: crate::bench::GridSpec,
    },
}

impl GridFile {
    pub fn points(&self, method: Method, ts: &TimeSeries) -> CliResult<Vec<GridPoint>> {
        match self {
            GridFile::Points(points) => Ok(points.clone()),
            GridFile::Product { p, lambda } => Ok(p
                .iter()
                .flat_map(|&p| lambda.iter().map(move |&lambda| GridPoint { p, lambda }))
                .collect()),
            GridFile::Relative { p, lambda_relative } => build_grid(method, ts, p, lambda_relative),
        }
    }
}

pub fn crossval(
    series: &Path,
    grid: &Path,
    n1: Option<usize>,
    n2: Option<usize>,
    t0: Option<usize>,
    method: Method,
    out: &Path,
) -> CliResult<Vec<String>> {
    let ts = load_series(series)?;
    let grid_file: GridFile = read_json(grid)?;
    let points = grid_file.points(method, &ts)?;
    let half = ts.t_len() / 2;
    let result = cross_validate(
        &ts,
        &points,
        n1.unwrap_or(half),
        n2.unwrap_or(half),
        t0.unwrap_or(ts.t_len() + 1),
        method,
    )?;
    write_json(
        out,
        &CvReport {
            spec_version: SPEC_VERSION.into(),
            result,
        },
    )?;
    Ok(vec![out.display().to_string()])
}

/// One-step forecasts of `X_t` for one-based `t = p+1, …, T+1`.
pub fn forecasts(lags: &[DenseMatrix], ts: &TimeSeries) -> CliResult<DenseMatrix> {
    let p = lags.len();
    if lags[0].rows() != ts.dim() {
        return Err(CliError::Input(format!(
            "model dimension {} differs from series dimension {}",
            lags[0].rows(),
            ts.dim()
        )));
    }
    if ts.t_len() < p {
        return Err(CliError::Input(format!(
            "series of length {} is shorter than p = {p}",
            ts.t_len()
        )));
    }
    let mut rows = Vec::with_capacity(ts.t_len() - p + 1);
    for end in p..=ts.t_len() {
        let history: Vec<&[f64]> = (end - p..end).map(|t| ts.row(t)).collect();
        rows.push(predict_next(lags, &history)?);
    }
    Ok(DenseMatrix::from_rows(&rows)?)
}

pub fn predict(model: &Path, series: &Path, out: &Path) -> CliResult<Vec<String>> {
    let lags = read_lags(model)?;
    let ts = load_series(series)?;
    write_matrix(out, &forecasts(&lags, &ts)?)?;
    Ok(vec![out.display().to_string()])
}

pub fn bench(config: &Path, out: &Path, full_scale: bool) -> CliResult<Vec<String>> {
    let mut cfg: BenchConfig = read_json(config)?;
    if full_scale {
        cfg.replicates = FULL_REPLICATES;
    }
    let output = run_bench(&cfg)?;
    let paths = write_bench(out, &cfg, &output)?;
    Ok(paths.iter().map(|p| p.display().to_string()).collect())
}
