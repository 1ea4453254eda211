//! Error metrics against a known truth, sign recovery, one-step prediction
//! and rolling-origin cross-validation over a `(p, λ)` grid.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covest::sample_covariances;
use crate::error::{Error, Result};
use crate::estimators::{
    direct_fit, estimate_direct_from_cov, estimate_ridge, lasso_fit, LassoProblem, Method,
};
use crate::linalg::{DenseMatrix, NormKind};
use crate::varproc::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub frobenius: f64,
    pub spectral: f64,
    pub induced_l1: f64,
    pub element_max: f64,
}

/// Norms of `estimate − truth` (both dp×d stacks or single lag matrices).
pub fn error_norms(estimate: &DenseMatrix, truth: &DenseMatrix) -> Result<ErrorReport> {
    let diff = estimate.sub(truth)?;
    Ok(ErrorReport {
        frobenius: diff.norm(NormKind::Frobenius),
        spectral: diff.norm(NormKind::Spectral),
        induced_l1: diff.norm(NormKind::InducedL1),
        element_max: diff.norm(NormKind::ElementMax),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignMetrics {
    pub exact_match: bool,
    /// Fraction of estimated nonzeros that are true nonzeros; 1 when the
    /// estimate has no nonzeros.
    pub support_precision: f64,
    /// Fraction of true nonzeros that are estimated nonzero; 1 when the truth
    /// has no nonzeros.
    pub support_recall: f64,
}

pub fn sign_metrics(truncated: &DenseMatrix, truth: &DenseMatrix) -> Result<SignMetrics> {
    if truncated.shape() != truth.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            truncated.shape(),
            truth.shape()
        )));
    }
    let sign = |v: f64| (v > 0.0) as i8 - (v < 0.0) as i8;
    let mut exact = true;
    let (mut est_nz, mut true_nz, mut both) = (0usize, 0usize, 0usize);
    for (&e, &t) in truncated.as_slice().iter().zip(truth.as_slice()) {
        exact &= sign(e) == sign(t);
        est_nz += (e != 0.0) as usize;
        true_nz += (t != 0.0) as usize;
        both += (e != 0.0 && t != 0.0) as usize;
    }
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            1.0
        } else {
            num as f64 / den as f64
        }
    };
    Ok(SignMetrics {
        exact_match: exact,
        support_precision: ratio(both, est_nz),
        support_recall: ratio(both, true_nz),
    })
}

/// One-step forecast `Σ_k Â_kᵀ X_{T+1−k}`. `history` holds the last `p`
/// observations in chronological order, so `history[p−1]` is `X_T`.
pub fn predict_next(lags: &[DenseMatrix], history: &[&[f64]]) -> Result<Vec<f64>> {
    let p = lags.len();
    if p == 0 || history.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "{p} lag matrices with {} history rows",
            history.len()
        )));
    }
    let d = lags[0].cols();
    let mut out = vec![0.0; d];
    for (k, a) in lags.iter().enumerate() {
        let x = history[p - 1 - k];
        if a.shape() != (d, d) || x.len() != d {
            return Err(Error::DimensionMismatch(
                "lag or history dimension differs".into(),
            ));
        }
        for (o, v) in out.iter_mut().zip(a.t_mat_vec(x)?) {
            *o += v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub p: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub method: Method,
    pub grid: Vec<GridPoint>,
    /// Average one-step error per grid point; `None` when some training fit
    /// at that point failed outright.
    pub mean_err: Vec<Option<f64>>,
    /// Infeasible column programs summed over all fits, per grid point.
    pub infeasible_columns: Vec<usize>,
    pub best: GridPoint,
    pub n1: usize,
    pub n2: usize,
    pub t0: usize,
}

/// Orders grid points by mean error, then prefers smaller `p`, then larger
/// `λ`.
fn prefer(a: (f64, GridPoint), b: (f64, GridPoint)) -> Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.p.cmp(&b.1.p))
        .then(b.1.lambda.total_cmp(&a.1.lambda))
}

/// Per evaluation time: error and infeasible-column count per grid point.
type TimeScores = Vec<Option<(f64, usize)>>;

fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Rolling-origin cross-validation.
///
/// `t0` is one-based. For each evaluation time `t ∈ {t0−n2, …, t0−1}` every
/// grid point is fitted on the `n1` observations `X_{t−n1}..X_{t−1}` and
/// scored by `‖X_t − Σ_k Â_kᵀX_{t−k}‖₂`; regressors never reach before the
/// training window. Tuning values are interpreted as in
/// [`crate::estimators::fit_method`].
pub fn cross_validate(
    ts: &TimeSeries,
    grid: &[GridPoint],
    n1: usize,
    n2: usize,
    t0: usize,
    method: Method,
) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(Error::BadParams("empty cross-validation grid".into()));
    }
    let max_p = grid.iter().map(|g| g.p).max().unwrap_or(0);
    if grid
        .iter()
        .any(|g| g.p == 0 || !(g.lambda >= 0.0) || !g.lambda.is_finite())
    {
        return Err(Error::BadParams(
            "grid points need p ≥ 1 and finite λ ≥ 0".into(),
        ));
    }
    if n2 == 0 || n1 < max_p + 2 {
        return Err(Error::WindowTooLarge(format!(
            "n1 = {n1} must be at least p + 2 = {} and n2 = {n2} positive",
            max_p + 2
        )));
    }
    if t0 < n1 + n2 + 1 || t0 > ts.t_len() + 1 {
        return Err(Error::WindowTooLarge(format!(
            "t0 = {t0} needs n1 + n2 < t0 ≤ T + 1 (n1 = {n1}, n2 = {n2}, T = {})",
            ts.t_len()
        )));
    }

    let mut ps: Vec<usize> = grid.iter().map(|g| g.p).collect();
    ps.sort_unstable();
    ps.dedup();

    let scores: Vec<Result<TimeScores>> = ((t0 - n2)..t0)
        .into_par_iter()
        .map(|t| score_time(ts, grid, &ps, n1, t, method))
        .collect();

    let mut sums = vec![Some(0.0); grid.len()];
    let mut infeasible = vec![0usize; grid.len()];
    for per_time in scores {
        for (g, s) in per_time?.into_iter().enumerate() {
            match (s, sums[g]) {
                (Some((err, inf)), Some(acc)) => {
                    sums[g] = Some(acc + err);
                    infeasible[g] += inf;
                }
                _ => sums[g] = None,
            }
        }
    }
    let mean_err: Vec<Option<f64>> = sums.iter().map(|s| s.map(|v| v / n2 as f64)).collect();
    let best = mean_err
        .iter()
        .zip(grid)
        .filter_map(|(e, g)| e.map(|e| (e, *g)))
        .min_by(|a, b| prefer(*a, *b))
        .map(|(_, g)| g)
        .ok_or_else(|| Error::AllColumnsInfeasible(ts.dim()))?;
    Ok(CvResult {
        method,
        grid: grid.to_vec(),
        mean_err,
        infeasible_columns: infeasible,
        best,
        n1,
        n2,
        t0,
    })
}

/// Fits every grid point on the window preceding one-based time `t`.
fn score_time(
    ts: &TimeSeries,
    grid: &[GridPoint],
    ps: &[usize],
    n1: usize,
    t: usize,
    method: Method,
) -> Result<TimeScores> {
    let train = ts.window(t - 1 - n1, n1)?;
    let target = ts.row(t - 1);
    let mut out: TimeScores = vec![None; grid.len()];
    for &p in ps {
        let history: Vec<&[f64]> = (n1 - p..n1).map(|i| train.row(i)).collect();
        let mut idx: Vec<usize> = (0..grid.len()).filter(|&g| grid[g].p == p).collect();
        let score = |lags: &[DenseMatrix]| -> Result<f64> {
            Ok(l2_distance(target, &predict_next(lags, &history)?))
        };
        match method {
            Method::Direct => {
                let cov = sample_covariances(&train, p)?;
                for g in idx {
                    match estimate_direct_from_cov(&cov, ts.dim(), grid[g].lambda) {
                        Ok(est) => {
                            let fit = direct_fit(est);
                            out[g] = Some((score(&fit.lags)?, fit.infeasible_columns));
                        }
                        Err(Error::AllColumnsInfeasible(_)) => out[g] = None,
                        Err(e) => return Err(e),
                    }
                }
            }
            Method::Lasso => {
                let problem = LassoProblem::new(&train, p)?;
                // Largest penalty first so each solve warm-starts from a
                // sparser neighbour; the order is fixed by the values, not
                // by the grid order.
                idx.sort_by(|&a, &b| grid[b].lambda.total_cmp(&grid[a].lambda).then(a.cmp(&b)));
                let mut warm: Option<DenseMatrix> = None;
                for g in idx {
                    let (stack, _, converged) = problem.solve(grid[g].lambda, warm.as_ref())?;
                    let fit = lasso_fit(&stack, ts.dim(), converged)?;
                    out[g] = Some((score(&fit.lags)?, 0));
                    warm = Some(stack);
                }
            }
            Method::Ridge => {
                for g in idx {
                    let lags = estimate_ridge(&train, p, grid[g].lambda)?;
                    out[g] = Some((score(&lags)?, 0));
                }
            }
        }
    }
    Ok(out)
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn error_norms_of_identity_difference() {
        let truth = DenseMatrix::zeros(3, 3);
        let rep = error_norms(&DenseMatrix::identity(3), &truth).unwrap();
        assert!((rep.frobenius - 3f64.sqrt()).abs() < 1e-15);
        assert!((rep.spectral - 1.0).abs() < 1e-12);
        assert_eq!(rep.induced_l1, 1.0);
        assert_eq!(rep.element_max, 1.0);
        let zero = error_norms(&truth, &truth).unwrap();
        assert_eq!(
            zero,
            ErrorReport {
                frobenius: 0.0,
                spectral: 0.0,
                induced_l1: 0.0,
                element_max: 0.0
            }
        );
        assert!(error_norms(&truth, &DenseMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn sign_metrics_conventions() {
        let truth = mat(&[&[0.5, 0.0], &[-0.2, 0.3]]);
        let same = sign_metrics(&truth, &truth).unwrap();
        assert!(same.exact_match);
        assert_eq!((same.support_precision, same.support_recall), (1.0, 1.0));
        let empty = sign_metrics(&DenseMatrix::zeros(2, 2), &truth).unwrap();
        assert!(!empty.exact_match);
        assert_eq!((empty.support_precision, empty.support_recall), (1.0, 0.0));
        let flipped = sign_metrics(&mat(&[&[0.5, 0.1], &[0.2, 0.3]]), &truth).unwrap();
        assert!(!flipped.exact_match);
        assert_eq!(flipped.support_precision, 0.75);
        assert_eq!(flipped.support_recall, 1.0);
    }

    #[test]
    fn predict_next_cases() {
        let x1 = [1.0, 2.0];
        let x2 = [3.0, -1.0];
        let zero = vec![DenseMatrix::zeros(2, 2), DenseMatrix::zeros(2, 2)];
        assert_eq!(predict_next(&zero, &[&x1, &x2]).unwrap(), vec![0.0, 0.0]);
        let id = vec![DenseMatrix::identity(2)];
        assert_eq!(predict_next(&id, &[&x2]).unwrap(), x2.to_vec());
        // A₁ᵀX_T + A₂ᵀX_{T−1} with X_T = x2, X_{T−1} = x1, by hand:
        // A₁ᵀ = [[1,0],[1,1]] → (3, 2); A₂ᵀ = [[0,2],[0,0]] → (4, 0).
        let a1 = mat(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let a2 = mat(&[&[0.0, 0.0], &[2.0, 0.0]]);
        assert_eq!(
            predict_next(&[a1, a2], &[&x1, &x2]).unwrap(),
            vec![7.0, 2.0]
        );
        assert!(predict_next(&id, &[&x1, &x2]).is_err());
    }

    #[test]
    fn tie_rule_prefers_small_p_then_large_lambda() {
        let a = (1.0, GridPoint { p: 2, lambda: 0.5 });
        let b = (1.0, GridPoint { p: 1, lambda: 0.1 });
        let c = (1.0, GridPoint { p: 1, lambda: 0.3 });
        let mut v = [a, b, c];
        v.sort_by(|x, y| prefer(*x, *y));
        assert_eq!(v[0].1, c.1);
        assert_eq!(v[1].1, b.1);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.01, 2.0, 20);
        assert_eq!(g.len(), 20);
        assert!((g[0] - 0.01).abs() < 1e-15);
        assert!((g[19] - 2.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
