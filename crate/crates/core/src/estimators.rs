//! Transition-matrix estimators: the column-wise linear-programming
//! estimator, and the ridge and lasso least-squares baselines.
//!
//! All three return `A₁..A_p` split from a dp×d coefficient stack by
//! consecutive row blocks of `d` rows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covest::{sample_covariances, CovPair};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, DenseMatrix};
use crate::lp::{build_column_lp, recover_beta, solve_simplex, LpStatus};
use crate::varproc::TimeSeries;

pub const LASSO_TOL: f64 = 1e-7;
pub const LASSO_MAX_SWEEPS: usize = 10_000;
/// Constant used by the multi-lag tuning formula when none is supplied.
pub const DEFAULT_TUNING_CONSTANT: f64 = 32.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectEstimate {
    /// dp×d coefficient stack `Ω̂`.
    pub omega_hat: DenseMatrix,
    pub lags: Vec<DenseMatrix>,
    pub lambda0: f64,
    pub per_column_status: Vec<LpStatus>,
    pub pivots: usize,
}

impl DirectEstimate {
    pub fn infeasible_columns(&self) -> usize {
        self.per_column_status
            .iter()
            .filter(|s| **s != LpStatus::Optimal)
            .count()
    }
}

fn split_lags(stack: &DenseMatrix, d: usize) -> Result<Vec<DenseMatrix>> {
    stack.split_rows(d)
}

/// Fits the direct estimator: for each response `j` solve
/// `min ‖v‖₁ s.t. ‖S·v − (S₁)_{*,j}‖_∞ ≤ λ₀`.
///
/// Columns run on the ambient rayon pool and are assembled by index, so the
/// result does not depend on the number of workers. Infeasible columns are
/// left at zero and flagged; if every column is infeasible the whole fit
/// fails.
pub fn estimate_direct(ts: &TimeSeries, p: usize, lambda0: f64) -> Result<DirectEstimate> {
    let cov = sample_covariances(ts, p)?;
    estimate_direct_from_cov(&cov, ts.dim(), lambda0)
}

/// [`estimate_direct`] from precomputed covariances of a series of
/// dimension `d`.
pub fn estimate_direct_from_cov(cov: &CovPair, d: usize, lambda0: f64) -> Result<DirectEstimate> {
    let m = cov.s.rows();
    if d == 0 || m % d != 0 {
        return Err(Error::DimensionMismatch(format!(
            "covariance of size {m} for dimension {d}"
        )));
    }
    let columns: Vec<Result<(Vec<f64>, LpStatus, usize)>> = (0..d)
        .into_par_iter()
        .map(|j| {
            let lp = build_column_lp(&cov.s, &cov.s1.column(j), lambda0)?;
            let sol = solve_simplex(&lp)?;
            match sol.status {
                LpStatus::Optimal => Ok((recover_beta(&sol, m)?, sol.status, sol.pivots)),
                status => Ok((vec![0.0; m], status, sol.pivots)),
            }
        })
        .collect();
    let mut omega = vec![0.0; m * d];
    let mut statuses = Vec::with_capacity(d);
    let mut pivots = 0;
    for (j, col) in columns.into_iter().enumerate() {
        let (beta, status, piv) = col?;
        for (i, b) in beta.into_iter().enumerate() {
            omega[i * d + j] = b;
        }
        statuses.push(status);
        pivots += piv;
    }
    if statuses.iter().all(|s| *s != LpStatus::Optimal) {
        return Err(Error::AllColumnsInfeasible(d));
    }
    let omega_hat = DenseMatrix::new(m, d, omega)?;
    Ok(DirectEstimate {
        lags: split_lags(&omega_hat, d)?,
        omega_hat,
        lambda0,
        per_column_status: statuses,
        pivots,
    })
}

/// Population quantities entering the theoretical tuning parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningInputs {
    /// `‖Σ̃‖₂`
    pub sigma_norm2: f64,
    pub sigma_diag_max: f64,
    pub sigma_diag_min: f64,
    /// `‖Ã‖₂`
    pub a_norm2: f64,
    /// Bound on the induced L1 norm of the transition stack.
    pub m_d: f64,
    /// Constant of the multi-lag formula; unused when `p = 1`.
    pub c_const: f64,
}

/// Theoretical constraint level.
///
/// For `p = 1`:
/// `32‖Σ‖₂ max Σ_jj / (min Σ_jj (1 − ‖A‖₂)) · (2M_d + 3) · √(log d / T)`.
/// For `p > 1`:
/// `C‖Σ̃‖₂ max Σ̃_jj max(M_dp, 1) / (min Σ̃_jj (1 − ‖Ã‖₂)) · √((log d + log p)/(T − p))`.
pub fn theoretical_lambda(inputs: &TuningInputs, d: usize, p: usize, t_len: usize) -> Result<f64> {
    if inputs.a_norm2 >= 1.0 {
        return Err(Error::UnstableModel(inputs.a_norm2));
    }
    if !(inputs.sigma_diag_min > 0.0) || p == 0 || t_len <= p || d == 0 {
        return Err(Error::BadParams(format!(
            "need min Σ_jj > 0, p ≥ 1 and T > p (got {}, {p}, {t_len})",
            inputs.sigma_diag_min
        )));
    }
    let ratio = inputs.sigma_norm2 * inputs.sigma_diag_max
        / (inputs.sigma_diag_min * (1.0 - inputs.a_norm2));
    let lambda = if p == 1 {
        32.0 * ratio * (2.0 * inputs.m_d + 3.0) * ((d as f64).ln() / t_len as f64).sqrt()
    } else {
        inputs.c_const
            * ratio
            * inputs.m_d.max(1.0)
            * (((d as f64).ln() + (p as f64).ln()) / (t_len - p) as f64).sqrt()
    };
    Ok(lambda)
}

/// Hard thresholding: entries with `|a_ij| < gamma` become zero.
pub fn truncate(estimate: &DenseMatrix, gamma: f64) -> Result<DenseMatrix> {
    if !(gamma >= 0.0) {
        return Err(Error::BadParams(format!(
            "truncation level {gamma} must be >= 0"
        )));
    }
    estimate.map(|v| if v.abs() >= gamma { v } else { 0.0 })
}

/// Symmetric estimate keeping, for each off-diagonal pair, the entry of
/// smaller magnitude. On exact magnitude ties the upper-triangular entry
/// `(j, k)`, `j < k`, wins.
pub fn symmetrize(estimate: &DenseMatrix) -> Result<DenseMatrix> {
    if !estimate.is_square() {
        return Err(Error::DimensionMismatch(
            "symmetrize needs a square matrix".into(),
        ));
    }
    let n = estimate.rows();
    let mut out = estimate.clone();
    for j in 0..n {
        for k in (j + 1)..n {
            let upper = estimate.get(j, k);
            let lower = estimate.get(k, j);
            let v = if lower.abs() < upper.abs() {
                lower
            } else {
                upper
            };
            out.set(j, k, v);
            out.set(k, j, v);
        }
    }
    Ok(out)
}

/// Least-squares design of the lag-p regression: `X̃` has columns
/// `(X_{t−1}, …, X_{t−p})` and `Ỹ` columns `X_t`, for `t = p+1..T`.
/// Returns `(X̃X̃ᵀ, X̃Ỹᵀ, T − p)`.
pub fn regression_moments(ts: &TimeSeries, p: usize) -> Result<(DenseMatrix, DenseMatrix, usize)> {
    if p == 0 {
        return Err(Error::BadParams("lag order must be at least 1".into()));
    }
    if ts.t_len() < p + 1 {
        return Err(Error::SeriesTooShort {
            t_len: ts.t_len(),
            p,
        });
    }
    let d = ts.dim();
    let m = d * p;
    let n = ts.t_len() - p;
    let mut gram = vec![0.0; m * m];
    let mut cross = vec![0.0; m * d];
    let mut x = vec![0.0; m];
    for t in p..ts.t_len() {
        for k in 0..p {
            x[k * d..(k + 1) * d].copy_from_slice(ts.row(t - 1 - k));
        }
        let y = ts.row(t);
        for (i, &a) in x.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (g, b) in gram[i * m + i..(i + 1) * m].iter_mut().zip(&x[i..]) {
                *g += a * b;
            }
            for (c, b) in cross[i * d..(i + 1) * d].iter_mut().zip(y) {
                *c += a * b;
            }
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            gram[j * m + i] = gram[i * m + j];
        }
    }
    Ok((
        DenseMatrix::new(m, m, gram)?,
        DenseMatrix::new(m, d, cross)?,
        n,
    ))
}

/// Ridge-penalized least squares `(X̃X̃ᵀ + γI)⁻¹X̃Ỹᵀ`.
pub fn estimate_ridge(ts: &TimeSeries, p: usize, gamma: f64) -> Result<Vec<DenseMatrix>> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::BadParams(format!(
            "ridge penalty {gamma} must be positive"
        )));
    }
    let (gram, cross, _) = regression_moments(ts, p)?;
    let m = gram.rows();
    let reg = gram.add(&DenseMatrix::scaled_identity(m, gamma))?;
    let l = cholesky(&reg)?;
    split_lags(&cholesky_solve(&l, &cross)?, ts.dim())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoEstimate {
    pub lags: Vec<DenseMatrix>,
    pub sweeps: usize,
    /// False when the sweep cap was reached; `lags` then holds the last
    /// iterate.
    pub converged: bool,
}

/// Coordinate-descent solver for `‖Ỹ − MᵀX̃‖_F² + λ Σ|M_ij|` on fixed
/// regression moments. Responses are independent problems.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    gram: DenseMatrix,
    cross: DenseMatrix,
    d: usize,
    n_obs: usize,
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

impl LassoProblem {
    pub fn new(ts: &TimeSeries, p: usize) -> Result<Self> {
        let (gram, cross, n_obs) = regression_moments(ts, p)?;
        Ok(Self {
            gram,
            cross,
            d: ts.dim(),
            n_obs,
        })
    }

    /// Number of regression targets `T − p`.
    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    /// Smallest λ at which every coefficient is zero: `2‖X̃Ỹᵀ‖_max`.
    pub fn kill_threshold(&self) -> f64 {
        2.0 * self.cross.max_abs()
    }

    fn solve_column(&self, j: usize, lambda: f64, beta: &mut [f64]) -> (usize, bool) {
        let m = self.gram.rows();
        let half = 0.5 * lambda;
        // g = c − G·β
        let mut g: Vec<f64> = (0..m).map(|k| self.cross.get(k, j)).collect();
        for (l, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (gk, glk) in g.iter_mut().zip(self.gram.row(l)) {
                    *gk -= glk * b;
                }
            }
        }
        for sweep in 1..=LASSO_MAX_SWEEPS {
            let mut max_change = 0.0_f64;
            for k in 0..m {
                let gkk = self.gram.get(k, k);
                let old = beta[k];
                let new = if gkk > 0.0 {
                    soft_threshold(g[k] + gkk * old, half) / gkk
                } else {
                    0.0
                };
                let delta = new - old;
                if delta != 0.0 {
                    beta[k] = new;
                    for (gl, gkl) in g.iter_mut().zip(self.gram.row(k)) {
                        *gl -= gkl * delta;
                    }
                    max_change = max_change.max(delta.abs());
                }
            }
            if max_change < LASSO_TOL {
                return (sweep, true);
            }
        }
        (LASSO_MAX_SWEEPS, false)
    }

    /// Solves at `lambda`, optionally warm-started from a dp×d stack.
    pub fn solve(
        &self,
        lambda: f64,
        warm: Option<&DenseMatrix>,
    ) -> Result<(DenseMatrix, usize, bool)> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::BadParams(format!(
                "lasso penalty {lambda} must be >= 0"
            )));
        }
        let m = self.gram.rows();
        if let Some(w) = warm {
            if w.shape() != (m, self.d) {
                return Err(Error::DimensionMismatch(
                    "warm start has the wrong shape".into(),
                ));
            }
        }
        let cols: Vec<(Vec<f64>, usize, bool)> = (0..self.d)
            .into_par_iter()
            .map(|j| {
                let mut beta = warm.map_or_else(|| vec![0.0; m], |w| w.column(j));
                let (sweeps, ok) = self.solve_column(j, lambda, &mut beta);
                (beta, sweeps, ok)
            })
            .collect();
        let mut stack = vec![0.0; m * self.d];
        let mut sweeps = 0;
        let mut converged = true;
        for (j, (beta, s, ok)) in cols.into_iter().enumerate() {
            for (i, b) in beta.into_iter().enumerate() {
                stack[i * self.d + j] = b;
            }
            sweeps = sweeps.max(s);
            converged &= ok;
        }
        Ok((DenseMatrix::new(m, self.d, stack)?, sweeps, converged))
    }
}

/// L1-penalized least squares by cyclic coordinate descent with exact
/// soft-threshold updates.
pub fn estimate_lasso(ts: &TimeSeries, p: usize, lambda: f64) -> Result<LassoEstimate> {
    let problem = LassoProblem::new(ts, p)?;
    let (stack, sweeps, converged) = problem.solve(lambda, None)?;
    Ok(LassoEstimate {
        lags: split_lags(&stack, ts.dim())?,
        sweeps,
        converged,
    })
}

/// Estimator selector shared by cross-validation, the CLI and the benchmark
/// harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Lasso,
    Ridge,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Direct, Method::Lasso, Method::Ridge];

    pub fn name(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Lasso => "lasso",
            Method::Ridge => "ridge",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Method::Direct),
            "lasso" => Ok(Method::Lasso),
            "ridge" => Ok(Method::Ridge),
            other => Err(Error::BadParams(format!("unknown method {other:?}"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of [`fit_method`].
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub lags: Vec<DenseMatrix>,
    /// One entry per response column: `optimal`/`infeasible` for the direct
    /// estimator, `converged`/`max_sweeps` for lasso, `solved` for ridge.
    pub column_status: Vec<String>,
    pub infeasible_columns: usize,
}

/// Fits `method` with tuning value `tuning`, passed to the estimator as is:
/// `λ₀` for the direct estimator, the lasso penalty `λ`, the ridge `γ`.
///
/// The direct constraint is on averaged covariances while the least-squares
/// penalties act on unnormalized sums, so a lasso or ridge value selected on
/// short windows is relatively weaker on a longer series.
pub fn fit_method(method: Method, ts: &TimeSeries, p: usize, tuning: f64) -> Result<Fit> {
    match method {
        Method::Direct => {
            let est = estimate_direct(ts, p, tuning)?;
            Ok(direct_fit(est))
        }
        Method::Lasso => {
            let problem = LassoProblem::new(ts, p)?;
            let (stack, _, converged) = problem.solve(tuning, None)?;
            lasso_fit(&stack, ts.dim(), converged)
        }
        Method::Ridge => {
            let lags = estimate_ridge(ts, p, tuning)?;
            Ok(Fit {
                column_status: vec!["solved".into(); ts.dim()],
                lags,
                infeasible_columns: 0,
            })
        }
    }
}

pub(crate) fn direct_fit(est: DirectEstimate) -> Fit {
    let infeasible_columns = est.infeasible_columns();
    Fit {
        column_status: est
            .per_column_status
            .iter()
            .map(|s| match s {
                LpStatus::Optimal => "optimal",
                LpStatus::Infeasible => "infeasible",
                LpStatus::Unbounded => "unbounded",
            })
            .map(String::from)
            .collect(),
        lags: est.lags,
        infeasible_columns,
    }
}

pub(crate) fn lasso_fit(stack: &DenseMatrix, d: usize, converged: bool) -> Result<Fit> {
    let status = if converged { "converged" } else { "max_sweeps" };
    Ok(Fit {
        lags: split_lags(stack, d)?,
        column_status: vec![status.into(); d],
        infeasible_columns: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn toy_series() -> TimeSeries {
        // Deterministic, full-rank, mildly autocorrelated.
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|t| {
                let t = t as f64;
                vec![
                    (0.7 * t).sin() + 0.1 * (1.3 * t).cos(),
                    (0.3 * t + 1.0).cos(),
                    (1.7 * t).sin() * 0.5,
                ]
            })
            .collect();
        TimeSeries::from_rows(&rows).unwrap()
    }

    #[test]
    fn huge_lambda_gives_zero_direct_estimate() {
        let ts = toy_series();
        let cov = sample_covariances(&ts, 1).unwrap();
        let est = estimate_direct(&ts, 1, cov.s1.max_abs()).unwrap();
        assert_eq!(est.omega_hat.max_abs(), 0.0);
        assert!(est
            .per_column_status
            .iter()
            .all(|s| *s == LpStatus::Optimal));
    }

    #[test]
    fn direct_lags_are_row_blocks() {
        let ts = toy_series();
        let est = estimate_direct(&ts, 2, 0.05).unwrap();
        assert_eq!(est.omega_hat.shape(), (6, 3));
        assert_eq!(est.lags.len(), 2);
        assert_eq!(est.lags[1], est.omega_hat.block(3, 0, 3, 3).unwrap());
    }

    #[test]
    fn theoretical_lambda_lag_one() {
        let inputs = TuningInputs {
            sigma_norm2: 1.0,
            sigma_diag_max: 1.0,
            sigma_diag_min: 1.0,
            a_norm2: 0.5,
            m_d: 1.0,
            c_const: DEFAULT_TUNING_CONSTANT,
        };
        let lam = theoretical_lambda(&inputs, 8, 1, 512).unwrap();
        let hand = 320.0 * (8f64.ln() / 512.0).sqrt();
        assert!((lam - hand).abs() < 1e-12);
        assert!((lam - 20.39).abs() < 0.01);
        let doubled = theoretical_lambda(&inputs, 8, 1, 1024).unwrap();
        assert!((lam / doubled - 2f64.sqrt()).abs() < 1e-12);
        let near_unit = TuningInputs {
            a_norm2: 0.999,
            ..inputs
        };
        let ratio = theoretical_lambda(&near_unit, 8, 1, 512).unwrap() / lam;
        assert!((ratio - 500.0).abs() < 1e-6);
        let unstable = TuningInputs {
            a_norm2: 1.0,
            ..inputs
        };
        assert_eq!(
            theoretical_lambda(&unstable, 8, 1, 512),
            Err(Error::UnstableModel(1.0))
        );
    }

    #[test]
    fn theoretical_lambda_multi_lag() {
        let inputs = TuningInputs {
            sigma_norm2: 2.0,
            sigma_diag_max: 1.5,
            sigma_diag_min: 1.0,
            a_norm2: 0.5,
            m_d: 0.5,
            c_const: 32.0,
        };
        let lam = theoretical_lambda(&inputs, 10, 3, 103).unwrap();
        let hand = 32.0 * 2.0 * 1.5 / 0.5 * 1.0 * ((10f64.ln() + 3f64.ln()) / 100.0).sqrt();
        assert!((lam - hand).abs() < 1e-12);
    }

    #[test]
    fn truncate_cases() {
        let a = mat(&[&[0.5, 0.01], &[-0.3, 0.0]]);
        assert_eq!(truncate(&a, 0.0).unwrap(), a);
        assert_eq!(
            truncate(&a, 0.1).unwrap(),
            mat(&[&[0.5, 0.0], &[-0.3, 0.0]])
        );
        assert_eq!(truncate(&a, 0.6).unwrap().max_abs(), 0.0);
        assert!(truncate(&a, -1.0).is_err());
    }

    #[test]
    fn symmetrize_cases() {
        let s = mat(&[&[1.0, 0.2], &[0.2, 3.0]]);
        assert_eq!(symmetrize(&s).unwrap(), s);
        let a = mat(&[&[0.1, 0.9], &[0.2, 0.3]]);
        assert_eq!(symmetrize(&a).unwrap(), mat(&[&[0.1, 0.2], &[0.2, 0.3]]));
        let tie = mat(&[&[0.0, 0.5], &[-0.5, 0.0]]);
        assert_eq!(symmetrize(&tie).unwrap(), mat(&[&[0.0, 0.5], &[0.5, 0.0]]));
        assert!(symmetrize(&DenseMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn ridge_scalar_closed_form() {
        let xs = [0.3, -1.2, 0.8, 0.5, -0.4, 1.1, 0.2];
        let ts = TimeSeries::new(xs.len(), 1, xs.to_vec()).unwrap();
        let gamma = 0.7;
        let num: f64 = xs.windows(2).map(|w| w[0] * w[1]).sum();
        let den: f64 = xs[..xs.len() - 1].iter().map(|x| x * x).sum::<f64>() + gamma;
        let est = estimate_ridge(&ts, 1, gamma).unwrap();
        assert!((est[0].get(0, 0) - num / den).abs() < 1e-12);
    }

    #[test]
    fn ridge_penalty_dominance() {
        let est = estimate_ridge(&toy_series(), 1, 1e9).unwrap();
        assert!(est[0].max_abs() < 1e-5);
        assert!(estimate_ridge(&toy_series(), 1, 0.0).is_err());
    }

    #[test]
    fn lasso_single_predictor_soft_threshold() {
        let xs = [0.3, -1.2, 0.8, 0.5, -0.4, 1.1, 0.2];
        let ts = TimeSeries::new(xs.len(), 1, xs.to_vec()).unwrap();
        let c: f64 = xs.windows(2).map(|w| w[0] * w[1]).sum();
        let g: f64 = xs[..xs.len() - 1].iter().map(|x| x * x).sum();
        for lambda in [0.0, 0.1, 0.5, 2.0 * c.abs() + 1.0] {
            let est = estimate_lasso(&ts, 1, lambda).unwrap();
            let expect = soft_threshold(c, lambda / 2.0) / g;
            assert!(
                (est.lags[0].get(0, 0) - expect).abs() < 1e-10,
                "λ = {lambda}"
            );
            assert!(est.converged);
        }
    }

    #[test]
    fn lasso_kill_threshold_is_exact() {
        let ts = toy_series();
        let problem = LassoProblem::new(&ts, 1).unwrap();
        let est = estimate_lasso(&ts, 1, problem.kill_threshold()).unwrap();
        assert!(est.lags[0].as_slice().iter().all(|&v| v == 0.0));
        assert!(estimate_lasso(&ts, 1, -1.0).is_err());
    }
}
