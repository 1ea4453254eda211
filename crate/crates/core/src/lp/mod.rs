//! Dense two-phase simplex and the per-column linear program of the direct
//! estimator.
//!
//! A column program reads `min 1ᵀω  s.t.  θ + Wω ≥ 0, ω ≥ 0` with
//! `ω = (v⁺, v⁻)`, `θ = (s₁ + λ₀1, −s₁ + λ₀1)` and `W = [[−S, S], [S, −S]]`.
//! The general-form two-phase solver handles `min cᵀx s.t. Ax ≥ b, x ≥ 0`.
//! Column programs go to a bounded-variable dual simplex over the `m`
//! equality rows `Sv − r = s₁`, `|r| ≤ λ₀`: the same program with half the
//! rows and a dual feasible starting basis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SYMMETRY_TOL};

mod bounded;

/// Entries of the pivot column below this magnitude never pivot.
pub const PIVOT_TOL: f64 = 1e-9;
/// Reduced costs must be below `-PRICING_TOL` to enter the basis.
pub const PRICING_TOL: f64 = 1e-9;
/// Feasibility slack accepted when checking a returned vertex.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots after which pricing falls back to Bland's
/// lowest-index rule until progress resumes.
const DEGENERATE_RUN: usize = 50;

/// The standardized program for one response column.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnLp {
    theta: Vec<f64>,
    w: DenseMatrix,
    m: usize,
    s1_col: Vec<f64>,
    lambda0: f64,
}

impl ColumnLp {
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn w(&self) -> &DenseMatrix {
        &self.w
    }

    /// Number of regression coefficients (half the number of LP variables).
    pub fn m(&self) -> usize {
        self.m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    /// Primal vertex; all zeros unless `status` is `Optimal`.
    pub omega: Vec<f64>,
    pub objective: f64,
    pub status: LpStatus,
    pub pivots: usize,
}

/// Assembles `θ` and `W` from the marginal covariance `s`, one column of the
/// lag-one covariance, and the constraint level `lambda0`.
pub fn build_column_lp(s: &DenseMatrix, s1_col: &[f64], lambda0: f64) -> Result<ColumnLp> {
    let m = s.rows();
    if !s.is_square() || s1_col.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "S is {:?}, S₁ column has length {}",
            s.shape(),
            s1_col.len()
        )));
    }
    if !(lambda0 >= 0.0) || !lambda0.is_finite() {
        return Err(Error::BadParams(format!(
            "lambda0 = {lambda0} must be finite and >= 0"
        )));
    }
    let tol = SYMMETRY_TOL * s.max_abs();
    for i in 0..m {
        for j in (i + 1)..m {
            if (s.get(i, j) - s.get(j, i)).abs() > tol {
                return Err(Error::DimensionMismatch(format!(
                    "S is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let mut theta = Vec::with_capacity(2 * m);
    theta.extend(s1_col.iter().map(|v| v + lambda0));
    theta.extend(s1_col.iter().map(|v| -v + lambda0));
    let n = 2 * m;
    let mut w = vec![0.0; n * n];
    for i in 0..m {
        for j in 0..m {
            let v = s.get(i, j);
            w[i * n + j] = -v;
            w[i * n + m + j] = v;
            w[(m + i) * n + j] = v;
            w[(m + i) * n + m + j] = -v;
        }
    }
    Ok(ColumnLp {
        theta,
        w: DenseMatrix::new(n, n, w)?,
        m,
        s1_col: s1_col.to_vec(),
        lambda0,
    })
}

/// Solves a column program. When `θ ≥ 0` the origin is feasible and, the
/// objective being nonnegative, optimal; no tableau is built in that case.
pub fn solve_simplex(lp: &ColumnLp) -> Result<LpSolution> {
    let n = 2 * lp.m;
    if lp.theta.iter().all(|&t| t >= 0.0) {
        return Ok(LpSolution {
            omega: vec![0.0; n],
            objective: 0.0,
            status: LpStatus::Optimal,
            pivots: 0,
        });
    }
    bounded::solve_dual(&lp.w, lp.m, &lp.s1_col, lp.lambda0)
}

/// Solves a column program with the two-phase primal simplex on the
/// standardized form (`A = W`, `b = −θ`). Same optimum as
/// [`solve_simplex`] at several times the pivot count.
pub fn solve_simplex_two_phase(lp: &ColumnLp) -> Result<LpSolution> {
    let n = 2 * lp.m;
    let b: Vec<f64> = lp.theta.iter().map(|t| -t).collect();
    let mut sol = solve_lp(&vec![1.0; n], &lp.w, &b)?;
    if sol.status == LpStatus::Optimal {
        sol.objective = sol.omega.iter().sum();
    }
    Ok(sol)
}

/// Coefficients `v = v⁺ − v⁻` from an optimal column solution.
pub fn recover_beta(sol: &LpSolution, m: usize) -> Result<Vec<f64>> {
    if sol.status != LpStatus::Optimal {
        return Err(Error::NotOptimal);
    }
    if sol.omega.len() != 2 * m {
        return Err(Error::DimensionMismatch(format!(
            "omega has length {}, expected {}",
            sol.omega.len(),
            2 * m
        )));
    }
    Ok((0..m).map(|i| sol.omega[i] - sol.omega[m + i]).collect())
}

/// General-form entry point: `min cᵀx  s.t.  A·x ≥ b, x ≥ 0`, by a dense
/// two-phase tableau simplex. Phase one is skipped when `b ≤ 0`.
///
/// Pricing picks the most negative reduced cost; ties in pricing and in the
/// ratio test go to the lowest variable index (Bland's rule). A long run of
/// degenerate pivots switches pricing to pure Bland's rule until the
/// objective moves again, which rules out cycling.
pub fn solve_lp(c: &[f64], a: &DenseMatrix, b: &[f64]) -> Result<LpSolution> {
    let (rows, n) = a.shape();
    if c.len() != n || b.len() != rows {
        return Err(Error::DimensionMismatch(format!(
            "A is {rows}x{n}, c has length {}, b has length {}",
            c.len(),
            b.len()
        )));
    }
    if c.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::BadParams("LP data must be finite".into()));
    }
    let mut tab = Tableau::new(c, a, b);
    let max_pivots = 50 * (rows + n) + 1000;

    if tab.n_art > 0 {
        tab.set_phase_one_costs();
        match tab.run(max_pivots)? {
            Outcome::Optimal => {}
            // Phase one is bounded below by zero.
            Outcome::Unbounded => return Ok(tab.failed(LpStatus::Unbounded)),
        }
        let infeasibility = -tab.obj[tab.width - 1];
        let scale = b.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        if infeasibility > FEASIBILITY_TOL * scale {
            return Ok(tab.failed(LpStatus::Infeasible));
        }
        tab.drive_out_artificials();
    }
    tab.set_phase_two_costs(c);
    match tab.run(max_pivots)? {
        Outcome::Optimal => Ok(tab.solution(c)),
        Outcome::Unbounded => Ok(tab.failed(LpStatus::Unbounded)),
    }
}

enum Outcome {
    Optimal,
    Unbounded,
}

/// Row-major tableau `[structural | slack/surplus | artificial | rhs]`.
struct Tableau {
    n: usize,
    n_art: usize,
    width: usize,
    data: Vec<f64>,
    /// Active rows; redundant rows found after phase one are dropped.
    rows: Vec<usize>,
    basis: Vec<usize>,
    /// Reduced costs, with `-objective` in the last slot.
    obj: Vec<f64>,
    /// Columns allowed to enter.
    enterable: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    fn new(_c: &[f64], a: &DenseMatrix, b: &[f64]) -> Self {
        let (m, n) = a.shape();
        let needs_art: Vec<bool> = b.iter().map(|&v| v > 0.0).collect();
        let n_art = needs_art.iter().filter(|&&x| x).count();
        let width = n + m + n_art + 1;
        let mut data = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let mut next_art = n + m;
        for i in 0..m {
            let row = &mut data[i * width..(i + 1) * width];
            let a_row = a.row(i);
            if needs_art[i] {
                // A_i x − s_i + art_i = b_i
                row[..n].copy_from_slice(a_row);
                row[n + i] = -1.0;
                row[next_art] = 1.0;
                row[width - 1] = b[i];
                basis[i] = next_art;
                next_art += 1;
            } else {
                // −A_i x + s_i = −b_i ≥ 0
                for (r, v) in row[..n].iter_mut().zip(a_row) {
                    *r = -v;
                }
                row[n + i] = 1.0;
                row[width - 1] = -b[i];
                basis[i] = n + i;
            }
        }
        Self {
            n,
            n_art,
            width,
            data,
            rows: (0..m).collect(),
            basis,
            obj: vec![0.0; width],
            enterable: vec![true; width - 1],
            pivots: 0,
        }
    }

    fn art_start(&self) -> usize {
        self.width - 1 - self.n_art
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    /// Loads `cost` into the objective row and prices out the basis.
    fn load_costs(&mut self, cost: &[f64]) {
        self.obj.fill(0.0);
        self.obj[..cost.len()].copy_from_slice(cost);
        for &i in &self.rows {
            let cb = cost.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb == 0.0 {
                continue;
            }
            let row = &self.data[i * self.width..(i + 1) * self.width];
            for (o, r) in self.obj.iter_mut().zip(row) {
                *o -= cb * r;
            }
        }
    }

    fn set_phase_one_costs(&mut self) {
        let mut cost = vec![0.0; self.width - 1];
        let start = self.art_start();
        cost[start..].fill(1.0);
        self.load_costs(&cost);
    }

    fn set_phase_two_costs(&mut self, c: &[f64]) {
        let start = self.art_start();
        for j in start..self.width - 1 {
            self.enterable[j] = false;
        }
        let mut cost = vec![0.0; self.width - 1];
        cost[..self.n].copy_from_slice(c);
        self.load_costs(&cost);
    }

    fn drive_out_artificials(&mut self) {
        let start = self.art_start();
        let mut keep = Vec::with_capacity(self.rows.len());
        for idx in 0..self.rows.len() {
            let i = self.rows[idx];
            if self.basis[i] < start {
                keep.push(i);
                continue;
            }
            let row = self.row(i);
            let mut best: Option<(usize, f64)> = None;
            for (j, &v) in row[..start].iter().enumerate() {
                if v.abs() > PIVOT_TOL && best.map_or(true, |(_, b)| v.abs() > b) {
                    best = Some((j, v.abs()));
                }
            }
            // With no candidate only artificials remain in this row: it is a
            // linear combination of the others and carries no constraint.
            if let Some((j, _)) = best {
                self.pivot(i, j);
                keep.push(i);
            }
        }
        self.rows = keep;
    }

    fn choose_entering(&self, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (j, &d) in self.obj[..self.width - 1].iter().enumerate() {
            if !self.enterable[j] || d >= -PRICING_TOL {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.map_or(true, |(_, b)| d < b) {
                best = Some((j, d));
            }
        }
        best.map(|(j, _)| j)
    }

    fn choose_leaving(&self, col: usize) -> Option<(usize, f64)> {
        let rhs = self.width - 1;
        let mut best: Option<(usize, f64)> = None;
        for &i in &self.rows {
            let a = self.data[i * self.width + col];
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = self.data[i * self.width + rhs].max(0.0) / a;
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                    if (!tie && ratio < br) || (tie && self.basis[i] < self.basis[bi]) {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best
    }

    fn run(&mut self, max_pivots: usize) -> Result<Outcome> {
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= DEGENERATE_RUN;
            let Some(col) = self.choose_entering(bland) else {
                return Ok(Outcome::Optimal);
            };
            let Some((row, ratio)) = self.choose_leaving(col) else {
                return Ok(Outcome::Unbounded);
            };
            if self.pivots >= max_pivots {
                return Err(Error::PivotLimit(max_pivots));
            }
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(row, col);
        }
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let w = self.width;
        let piv = self.data[r * w + col];
        {
            let prow = &mut self.data[r * w..(r + 1) * w];
            let inv = 1.0 / piv;
            prow.iter_mut().for_each(|v| *v *= inv);
            prow[col] = 1.0;
        }
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let prow: &[f64] = prow;
        // A sparse pivot row is propagated through its nonzeros only.
        let nz: Vec<usize> = (0..w).filter(|&j| prow[j] != 0.0).collect();
        let dense = nz.len() * 4 > w;
        let eliminate = |row: &mut [f64]| {
            let f = row[col];
            if f != 0.0 {
                if dense {
                    for (v, &p) in row.iter_mut().zip(prow) {
                        *v -= f * p;
                    }
                } else {
                    for &j in &nz {
                        row[j] -= f * prow[j];
                    }
                }
                row[col] = 0.0;
            }
        };
        for &i in &self.rows {
            if i < r {
                eliminate(&mut before[i * w..(i + 1) * w]);
            } else if i > r {
                let k = i - r - 1;
                eliminate(&mut after[k * w..(k + 1) * w]);
            }
        }
        eliminate(&mut self.obj);
        self.basis[r] = col;
        self.pivots += 1;
    }

    fn failed(&self, status: LpStatus) -> LpSolution {
        LpSolution {
            omega: vec![0.0; self.n],
            objective: 0.0,
            status,
            pivots: self.pivots,
        }
    }

    fn solution(&self, c: &[f64]) -> LpSolution {
        let mut x = vec![0.0; self.n];
        for &i in &self.rows {
            let j = self.basis[i];
            if j < self.n {
                x[j] = self.data[i * self.width + self.width - 1].max(0.0);
            }
        }
        let objective = c.iter().zip(&x).map(|(a, b)| a * b).sum();
        LpSolution {
            omega: x,
            objective,
            status: LpStatus::Optimal,
            pivots: self.pivots,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_zero_column_program() {
        let lp = build_column_lp(&DenseMatrix::identity(2), &[0.0, 0.0], 0.1).unwrap();
        assert_eq!(lp.theta(), &[0.1, 0.1, 0.1, 0.1]);
        let expect = DenseMatrix::from_rows(&[
            vec![-1.0, 0.0, 1.0, 0.0],
            vec![0.0, -1.0, 0.0, 1.0],
            vec![1.0, 0.0, -1.0, 0.0],
            vec![0.0, 1.0, 0.0, -1.0],
        ])
        .unwrap();
        assert_eq!(lp.w(), &expect);
    }

    #[test]
    fn theta_substitution() {
        let lp = build_column_lp(&DenseMatrix::identity(2), &[0.5, 0.0], 0.1).unwrap();
        let expect = [0.6, 0.1, -0.4, 0.1];
        for (a, b) in lp.theta().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn build_rejects_bad_input() {
        let s = DenseMatrix::identity(2);
        assert!(matches!(
            build_column_lp(&s, &[1.0], 0.1),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(build_column_lp(&s, &[1.0, 0.0], -0.1).is_err());
        let asym = DenseMatrix::from_rows(&[vec![1.0, 0.2], vec![0.0, 1.0]]).unwrap();
        assert!(build_column_lp(&asym, &[1.0, 0.0], 0.1).is_err());
    }

    #[test]
    fn origin_is_optimal_when_theta_nonnegative() {
        let lp = build_column_lp(&DenseMatrix::identity(3), &[0.3, -0.2, 0.1], 0.3).unwrap();
        let sol = solve_simplex(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.objective, 0.0);
        assert!(sol.omega.iter().all(|&v| v == 0.0));
        assert_eq!(sol.pivots, 0);
    }

    #[test]
    fn general_form_covering_problem() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let sol = solve_lp(&[1.0, 1.0], &a, &[1.0]).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn general_form_infeasible_and_unbounded() {
        // x1 ≥ 1 and −x1 ≥ 0 cannot both hold.
        let a = DenseMatrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
        let sol = solve_lp(&[1.0], &a, &[1.0, 0.0]).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
        // min −x s.t. x ≥ 1 is unbounded.
        let a = DenseMatrix::from_rows(&[vec![1.0]]).unwrap();
        let sol = solve_lp(&[-1.0], &a, &[1.0]).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn identity_design_gives_soft_threshold() {
        // With S = I the program decouples: v_i = sign(b_i)·max(|b_i| − λ, 0).
        let b = [0.9, -0.5, 0.05];
        let lp = build_column_lp(&DenseMatrix::identity(3), &b, 0.2).unwrap();
        let sol = solve_simplex(&lp).unwrap();
        let v = recover_beta(&sol, 3).unwrap();
        let expect = [0.7, -0.3, 0.0];
        for (a, e) in v.iter().zip(expect) {
            assert!((a - e).abs() < 1e-12, "{v:?}");
        }
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_design_can_be_infeasible() {
        // S = [[1,1],[1,1]] only reaches vectors with equal entries.
        let s = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let lp = build_column_lp(&s, &[1.0, -1.0], 0.1).unwrap();
        assert_eq!(solve_simplex(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn recover_beta_definition_and_errors() {
        let sol = LpSolution {
            omega: vec![1.0, 0.0, 0.0, 2.0],
            objective: 3.0,
            status: LpStatus::Optimal,
            pivots: 0,
        };
        assert_eq!(recover_beta(&sol, 2).unwrap(), vec![1.0, -2.0]);
        let zero = LpSolution {
            omega: vec![0.0; 4],
            objective: 0.0,
            ..sol.clone()
        };
        assert_eq!(recover_beta(&zero, 2).unwrap(), vec![0.0, 0.0]);
        let bad = LpSolution {
            status: LpStatus::Infeasible,
            ..sol.clone()
        };
        assert_eq!(recover_beta(&bad, 2), Err(Error::NotOptimal));
        assert!(recover_beta(&sol, 3).is_err());
    }

    #[test]
    fn bounded_form_agrees_with_general_form() {
        let mut rng = crate::rng::SeededStream::new(41, 0);
        for case in 0..150usize {
            let m = 1 + case % 8;
            let n = if case % 3 == 0 {
                m.saturating_sub(1).max(1)
            } else {
                2 * m
            };
            let mut x = vec![0.0; n * m];
            rng.fill_normal(&mut x);
            let x = DenseMatrix::new(n, m, x).unwrap();
            let s = x
                .t_matmul(&x)
                .unwrap()
                .scale(1.0 / n as f64)
                .symmetrized()
                .unwrap();
            let mut s1 = vec![0.0; m];
            rng.fill_normal(&mut s1);
            let lambda = [0.0, 0.05, 0.3, 1.0][case % 4];
            let lp = build_column_lp(&s, &s1, lambda).unwrap();
            let fast = solve_simplex(&lp).unwrap();
            let slow = solve_simplex_two_phase(&lp).unwrap();
            assert_eq!(fast.status, slow.status, "case {case}");
            if fast.status == LpStatus::Optimal {
                assert!(
                    (fast.objective - slow.objective).abs() < 1e-8,
                    "case {case}"
                );
                let v = recover_beta(&fast, m).unwrap();
                let sv = s.mat_vec(&v).unwrap();
                for (a, b) in sv.iter().zip(&s1) {
                    assert!((a - b).abs() <= lambda + 1e-9, "case {case}");
                }
            }
        }
    }
}
