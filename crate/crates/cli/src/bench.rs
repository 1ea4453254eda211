//! Replicated synthetic benchmark: draw a model and series per replicate,
//! tune each method by cross-validation (or use fixed values), fit, and
//! summarize error norms per method.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use varlp::covest::sample_covariances;
use varlp::estimators::{fit_method, regression_moments, LassoProblem};
use varlp::eval::{cross_validate, error_norms, log_grid};
use varlp::{CvResult, ErrorReport, GridPoint, Method, TimeSeries, SPEC_VERSION};

use crate::error::{CliError, CliResult};
use crate::model::{generate_model, generate_series, stack_lags, ModelSpec};

/// Replicates used when a config does not say.
pub const DEFAULT_REPLICATES: usize = 100;
/// Replicate count used with `--full-scale`.
pub const FULL_REPLICATES: usize = 1000;

/// Candidate tuning values: explicit, or log-spaced multiples of a
/// per-method reference scale measured on the full series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Values { values: Vec<f64> },
    Relative { lo: f64, hi: f64, count: usize },
}

impl GridSpec {
    fn values(&self, scale: f64) -> Vec<f64> {
        match self {
            GridSpec::Values { values } => values.clone(),
            GridSpec::Relative { lo, hi, count } => log_grid(lo * scale, hi * scale, *count),
        }
    }

    fn validate(&self) -> CliResult<()> {
        let ok = match self {
            GridSpec::Values { values } => {
                !values.is_empty() && values.iter().all(|v| v.is_finite() && *v >= 0.0)
            }
            GridSpec::Relative { lo, hi, count } => {
                *count >= 1 && *lo > 0.0 && hi >= lo && hi.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(CliError::Config(format!("invalid tuning grid {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrids {
    #[serde(default = "LambdaGrids::default_direct")]
    pub direct: GridSpec,
    #[serde(default = "LambdaGrids::default_lasso")]
    pub lasso: GridSpec,
    #[serde(default = "LambdaGrids::default_ridge")]
    pub ridge: GridSpec,
}

impl LambdaGrids {
    fn default_direct() -> GridSpec {
        GridSpec::Relative {
            lo: 0.01,
            hi: 2.0,
            count: 20,
        }
    }

    fn default_lasso() -> GridSpec {
        GridSpec::Relative {
            lo: 0.01,
            hi: 2.0,
            count: 20,
        }
    }

    fn default_ridge() -> GridSpec {
        GridSpec::Relative {
            lo: 0.01,
            hi: 2.0,
            count: 20,
        }
    }

    pub fn get(&self, method: Method) -> &GridSpec {
        match method {
            Method::Direct => &self.direct,
            Method::Lasso => &self.lasso,
            Method::Ridge => &self.ridge,
        }
    }
}

impl Default for LambdaGrids {
    fn default() -> Self {
        Self {
            direct: Self::default_direct(),
            lasso: Self::default_lasso(),
            ridge: Self::default_ridge(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    /// Training window length; `T/2` when absent.
    #[serde(default)]
    pub n1: Option<usize>,
    /// Number of evaluation times; `T/2` when absent.
    #[serde(default)]
    pub n2: Option<usize>,
    /// Lag orders searched; the model's `p` when absent.
    #[serde(default)]
    pub p_grid: Option<Vec<usize>>,
    #[serde(default)]
    pub lambda_grid: LambdaGrids,
}

/// Fixed tuning values per method, used in place of cross-validation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixedTuning {
    #[serde(default)]
    pub direct: Option<f64>,
    #[serde(default)]
    pub lasso: Option<f64>,
    #[serde(default)]
    pub ridge: Option<f64>,
}

impl FixedTuning {
    fn get(&self, method: Method) -> Option<f64> {
        match method {
            Method::Direct => self.direct,
            Method::Lasso => self.lasso,
            Method::Ridge => self.ridge,
        }
    }
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    #[serde(flatten)]
    pub model: ModelSpec,
    /// Spectral norms to sweep; replaces `kappa` when present.
    #[serde(default)]
    pub kappas: Option<Vec<f64>>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    /// Cross-validation settings; used whenever `fixed` is absent.
    #[serde(default)]
    pub cv: Option<CvConfig>,
    #[serde(default)]
    pub fixed: Option<FixedTuning>,
}

impl BenchConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.replicates == 0 {
            return Err(CliError::Config("replicates must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(CliError::Config("methods must not be empty".into()));
        }
        if let Some(k) = &self.kappas {
            if k.is_empty() {
                return Err(CliError::Config("kappas must not be empty".into()));
            }
        }
        match (&self.fixed, &self.cv) {
            (Some(fixed), _) => {
                if let Some(m) = self.methods.iter().find(|m| fixed.get(**m).is_none()) {
                    return Err(CliError::Config(format!("no fixed tuning value for {m}")));
                }
            }
            (None, cv) => {
                let cv = cv.clone().unwrap_or_default();
                if cv
                    .p_grid
                    .as_ref()
                    .is_some_and(|g| g.is_empty() || g.contains(&0))
                {
                    return Err(CliError::Config(
                        "p_grid must be non-empty with p ≥ 1".into(),
                    ));
                }
                for m in &self.methods {
                    cv.lambda_grid.get(*m).validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn kappa_values(&self) -> Vec<f64> {
        self.kappas
            .clone()
            .unwrap_or_else(|| vec![self.model.kappa])
    }
}

/// Reference scale of the tuning parameter for `method` on `ts` at lag `p`:
/// the largest lag-one covariance entry feeding the column programs for the
/// direct method, the all-zero threshold of the lasso penalty, and the mean
/// diagonal of the regression Gram matrix for ridge.
pub fn tuning_scale(method: Method, ts: &TimeSeries, p: usize) -> CliResult<f64> {
    let d = ts.dim();
    Ok(match method {
        Method::Direct => {
            let cov = sample_covariances(ts, p)?;
            (0..cov.s1.rows())
                .flat_map(|i| cov.s1.row(i)[..d].iter().map(|v| v.abs()))
                .fold(0.0, f64::max)
        }
        Method::Lasso => LassoProblem::new(ts, p)?.kill_threshold(),
        Method::Ridge => {
            let (gram, _, _) = regression_moments(ts, p)?;
            (0..gram.rows()).map(|i| gram.get(i, i)).sum::<f64>() / gram.rows() as f64
        }
    })
}

/// Grid points for `method` over `p_grid`, each `p` scaled by its own
/// reference value.
pub fn build_grid(
    method: Method,
    ts: &TimeSeries,
    p_grid: &[usize],
    spec: &GridSpec,
) -> CliResult<Vec<GridPoint>> {
    let mut grid = Vec::new();
    for &p in p_grid {
        let scale = match spec {
            GridSpec::Values { .. } => 1.0,
            GridSpec::Relative { .. } => tuning_scale(method, ts, p)?,
        };
        if !(scale > 0.0) {
            return Err(CliError::Input(format!(
                "zero tuning scale for {method} at p = {p}"
            )));
        }
        grid.extend(
            spec.values(scale)
                .into_iter()
                .map(|lambda| GridPoint { p, lambda }),
        );
    }
    Ok(grid)
}

/// Cross-validates `method` on `ts` with the settings in `cv`, using the
/// whole series (`t0 = T + 1`).
pub fn cross_validate_with(
    method: Method,
    ts: &TimeSeries,
    default_p: usize,
    cv: &CvConfig,
) -> CliResult<CvResult> {
    let half = ts.t_len() / 2;
    let p_grid = cv.p_grid.clone().unwrap_or_else(|| vec![default_p]);
    let grid = build_grid(method, ts, &p_grid, cv.lambda_grid.get(method))?;
    let n1 = cv.n1.unwrap_or(half);
    let n2 = cv.n2.unwrap_or(half);
    Ok(cross_validate(ts, &grid, n1, n2, ts.t_len() + 1, method)?)
}

/// One method on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub kappa: f64,
    pub replicate: usize,
    pub seed: u64,
    pub method: Method,
    pub p: usize,
    pub tuning: Option<f64>,
    /// Norms of the stacked coefficient error.
    pub errors: Option<ErrorReport>,
    pub infeasible_columns: usize,
    pub failure: Option<String>,
    #[serde(skip)]
    pub wall_ms: f64,
}

/// Mean and standard deviation of each error norm for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub kappa: f64,
    pub method: Method,
    pub replicates_ok: usize,
    pub replicates_failed: usize,
    pub infeasible_columns: usize,
    pub mean: Option<ErrorReport>,
    pub sd: Option<ErrorReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub kappa: f64,
    pub method: Method,
    /// Mean wall time per fit including tuning, in milliseconds.
    pub mean_wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutput {
    pub rows: Vec<BenchRow>,
    pub records: Vec<ReplicateRecord>,
    pub timing: Vec<TimingRow>,
}

impl BenchOutput {
    pub fn row(&self, kappa: f64, method: Method) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.kappa == kappa && r.method == method)
    }
}

/// Tunes and fits `method` on one series; returns the chosen `(p, tuning)`
/// and the fit.
pub fn run_method(
    config: &BenchConfig,
    method: Method,
    ts: &TimeSeries,
) -> CliResult<(usize, f64, varlp::Fit)> {
    let (p, tuning) = match &config.fixed {
        Some(fixed) => (config.model.p, fixed.get(method).unwrap_or_default()),
        None => {
            let cv = config.cv.clone().unwrap_or_default();
            let result = cross_validate_with(method, ts, config.model.p, &cv)?;
            (result.best.p, result.best.lambda)
        }
    };
    let fit = fit_method(method, ts, p, tuning)?;
    Ok((p, tuning, fit))
}

fn replicate_records(
    config: &BenchConfig,
    kappa: f64,
    replicate: usize,
) -> CliResult<Vec<ReplicateRecord>> {
    let seed = config.seed ^ replicate as u64;
    let mut spec = config.model.clone();
    spec.kappa = kappa;
    let model = generate_model(&spec, seed)?;
    let ts = generate_series(&spec, &model, seed)?;
    let mut out = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let start = Instant::now();
        let mut record = ReplicateRecord {
            kappa,
            replicate,
            seed,
            method,
            p: spec.p,
            tuning: None,
            errors: None,
            infeasible_columns: 0,
            failure: None,
            wall_ms: 0.0,
        };
        match run_method(config, method, &ts) {
            Ok((p, tuning, fit)) => {
                let depth = p.max(model.p());
                let est = stack_lags(&fit.lags, depth)?;
                let truth = stack_lags(model.transitions(), depth)?;
                record.p = p;
                record.tuning = Some(tuning);
                record.errors = Some(error_norms(&est, &truth)?);
                record.infeasible_columns = fit.infeasible_columns;
            }
            Err(CliError::Estimation(msg)) => record.failure = Some(msg),
            Err(e) => return Err(e),
        }
        record.wall_ms = start.elapsed().as_secs_f64() * 1e3;
        out.push(record);
    }
    Ok(out)
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn summarize(records: &[&ReplicateRecord]) -> (Option<ErrorReport>, Option<ErrorReport>) {
    let ok: Vec<&ErrorReport> = records.iter().filter_map(|r| r.errors.as_ref()).collect();
    if ok.is_empty() {
        return (None, None);
    }
    let stat = |f: fn(&ErrorReport) -> f64| mean_sd(&ok.iter().map(|e| f(e)).collect::<Vec<_>>());
    let (fm, fs) = stat(|e| e.frobenius);
    let (sm, ss) = stat(|e| e.spectral);
    let (lm, ls) = stat(|e| e.induced_l1);
    let (em, es) = stat(|e| e.element_max);
    (
        Some(ErrorReport {
            frobenius: fm,
            spectral: sm,
            induced_l1: lm,
            element_max: em,
        }),
        Some(ErrorReport {
            frobenius: fs,
            spectral: ss,
            induced_l1: ls,
            element_max: es,
        }),
    )
}

/// Runs every replicate (in parallel on the ambient pool) and aggregates by
/// `(kappa, method)`. Results are assembled in replicate order, so the
/// output does not depend on the number of workers.
pub fn run_bench(config: &BenchConfig) -> CliResult<BenchOutput> {
    config.validate()?;
    let kappas = config.kappa_values();
    let jobs: Vec<(f64, usize)> = kappas
        .iter()
        .flat_map(|&k| (0..config.replicates).map(move |r| (k, r)))
        .collect();
    let per_job: Vec<CliResult<Vec<ReplicateRecord>>> = jobs
        .par_iter()
        .map(|&(kappa, r)| replicate_records(config, kappa, r))
        .collect();
    let mut records = Vec::new();
    for job in per_job {
        records.extend(job?);
    }
    let mut rows = Vec::new();
    let mut timing = Vec::new();
    for &kappa in &kappas {
        for &method in &config.methods {
            let group: Vec<&ReplicateRecord> = records
                .iter()
                .filter(|r| r.kappa == kappa && r.method == method)
                .collect();
            let (mean, sd) = summarize(&group);
            let ok = group.iter().filter(|r| r.errors.is_some()).count();
            rows.push(BenchRow {
                kappa,
                method,
                replicates_ok: ok,
                replicates_failed: group.len() - ok,
                infeasible_columns: group.iter().map(|r| r.infeasible_columns).sum(),
                mean,
                sd,
            });
            timing.push(TimingRow {
                kappa,
                method,
                mean_wall_ms: group.iter().map(|r| r.wall_ms).sum::<f64>() / group.len() as f64,
            });
        }
    }
    Ok(BenchOutput {
        rows,
        records,
        timing,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub fn table_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(
        "kappa,method,replicates_ok,replicates_failed,infeasible_columns,\
         mean_frobenius,sd_frobenius,mean_spectral,sd_spectral,\
         mean_induced_l1,sd_induced_l1,mean_element_max,sd_element_max\n",
    );
    for r in rows {
        let m = |f: fn(&ErrorReport) -> f64| opt(r.mean.as_ref().map(f));
        let s = |f: fn(&ErrorReport) -> f64| opt(r.sd.as_ref().map(f));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.kappa,
            r.method,
            r.replicates_ok,
            r.replicates_failed,
            r.infeasible_columns,
            m(|e| e.frobenius),
            s(|e| e.frobenius),
            m(|e| e.spectral),
            s(|e| e.spectral),
            m(|e| e.induced_l1),
            s(|e| e.induced_l1),
            m(|e| e.element_max),
            s(|e| e.element_max),
        );
    }
    out
}

pub fn replicates_csv(records: &[ReplicateRecord]) -> String {
    let mut out = String::from(
        "kappa,replicate,seed,method,p,tuning,frobenius,spectral,induced_l1,element_max,\
         infeasible_columns,failure\n",
    );
    for r in records {
        let e = r.errors.as_ref();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.kappa,
            r.replicate,
            r.seed,
            r.method,
            r.p,
            opt(r.tuning),
            opt(e.map(|e| e.frobenius)),
            opt(e.map(|e| e.spectral)),
            opt(e.map(|e| e.induced_l1)),
            opt(e.map(|e| e.element_max)),
            r.infeasible_columns,
            r.failure.as_deref().unwrap_or("").replace(',', ";"),
        );
    }
    out
}

#[derive(Serialize)]
struct TableJson<'a> {
    spec_version: &'a str,
    config: &'a BenchConfig,
    rows: &'a [BenchRow],
}

#[derive(Serialize)]
struct TimingJson<'a> {
    spec_version: &'a str,
    rows: &'a [TimingRow],
}

/// Writes `table.csv`, `table.json`, `replicates.csv` (all deterministic)
/// and `timing.json` (wall times) into `dir`.
pub fn write_bench(
    dir: &Path,
    config: &BenchConfig,
    output: &BenchOutput,
) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let table = TableJson {
        spec_version: SPEC_VERSION,
        config,
        rows: &output.rows,
    };
    let timing = TimingJson {
        spec_version: SPEC_VERSION,
        rows: &output.timing,
    };
    let files = [
        ("table.csv", table_csv(&output.rows)),
        ("table.json", serde_json::to_string_pretty(&table)? + "\n"),
        ("replicates.csv", replicates_csv(&output.records)),
        ("timing.json", serde_json::to_string_pretty(&timing)? + "\n"),
    ];
    let mut paths = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        paths.push(path);
    }
    Ok(paths)
}
