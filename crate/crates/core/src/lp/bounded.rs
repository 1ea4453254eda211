//! Bounded-variable dual simplex for one column program written as
//!
//! ```text
//! min Σ(v⁺ + v⁻)  s.t.  S v⁺ − S v⁻ − r = s₁,  −λ ≤ r ≤ λ,  v± ≥ 0.
//! ```
//!
//! The `2m` inequality rows of `θ + Wω ≥ 0` become `m` equality rows with a
//! boxed residual `r`. The basis of all residuals is dual feasible, so no
//! artificial phase is needed.

use super::{LpSolution, LpStatus, DEGENERATE_RUN, FEASIBILITY_TOL, PIVOT_TOL};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic,
    AtLower,
    AtUpper,
}

/// Columns: `v⁺` (0..m), `v⁻` (m..2m), `r` (2m..3m).
struct Boxed {
    m: usize,
    width: usize,
    /// Row-major `B⁻¹A`.
    data: Vec<f64>,
    /// Value of the basic variable of each row.
    xb: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Reduced costs.
    obj: Vec<f64>,
    pivots: usize,
}

/// Dual simplex from the basis of all residuals `r`, which is dual feasible
/// for every column program (reduced costs of `v±` are 1). Rows whose
/// residual is out of its box leave one at a time; a row with no eligible
/// entering column proves the program infeasible.
pub(super) fn solve_dual(w: &DenseMatrix, m: usize, s1: &[f64], lambda: f64) -> Result<LpSolution> {
    let mut tab = Boxed::new(w, m, s1, lambda);
    let max_pivots = 50 * (2 * m + 2 * m) + 1000;
    let mut cost = vec![0.0; tab.width];
    cost[..2 * m].fill(1.0);
    tab.load_costs(&cost);
    let scale = s1.iter().fold(1.0_f64, |a, v| a.max(v.abs() + lambda));
    let mut degenerate = 0usize;
    loop {
        let bland = degenerate >= DEGENERATE_RUN;
        let Some((r, target)) = tab.choose_leaving_dual(bland, FEASIBILITY_TOL * scale) else {
            return Ok(tab.solution());
        };
        let Some((q, ratio)) = tab.choose_entering_dual(r, target) else {
            return Ok(tab.failed(LpStatus::Infeasible));
        };
        if tab.pivots >= max_pivots {
            return Err(Error::PivotLimit(max_pivots));
        }
        degenerate = if ratio <= 1e-12 { degenerate + 1 } else { 0 };
        let leaving = tab.basis[r];
        let alpha = tab.data[r * tab.width + q];
        let delta = (tab.xb[r] - target) / alpha;
        let start = match tab.state[q] {
            State::AtUpper => tab.upper[q],
            _ => tab.lower[q],
        };
        for i in 0..m {
            tab.xb[i] -= delta * tab.data[i * tab.width + q];
        }
        tab.state[leaving] = if target == tab.lower[leaving] {
            State::AtLower
        } else {
            State::AtUpper
        };
        tab.pivot(r, q);
        tab.xb[r] = start + delta;
        tab.state[q] = State::Basic;
    }
}

impl Boxed {
    /// Most violated basic variable (lowest index under Bland's rule) and
    /// the bound it is sent to.
    fn choose_leaving_dual(&self, bland: bool, tol: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..self.m {
            let bv = self.basis[i];
            let (viol, target) = if self.xb[i] < self.lower[bv] - tol {
                (self.lower[bv] - self.xb[i], self.lower[bv])
            } else if self.xb[i] > self.upper[bv] + tol {
                (self.xb[i] - self.upper[bv], self.upper[bv])
            } else {
                continue;
            };
            let better = match best {
                None => true,
                Some((bi, _, bv_viol)) => {
                    if bland {
                        bv < self.basis[bi]
                    } else {
                        viol > bv_viol || (viol == bv_viol && bv < self.basis[bi])
                    }
                }
            };
            if better {
                best = Some((i, target, viol));
            }
        }
        best.map(|(i, t, _)| (i, t))
    }

    /// Dual ratio test on row `r` whose basic variable moves to `target`.
    /// Ties go to the lowest column index.
    fn choose_entering_dual(&self, r: usize, target: f64) -> Option<(usize, f64)> {
        let row = &self.data[r * self.width..(r + 1) * self.width];
        let increase = target > self.xb[r];
        let mut best: Option<(usize, f64)> = None;
        for (j, &a) in row.iter().enumerate() {
            if a.abs() <= PIVOT_TOL
                || self.state[j] == State::Basic
                || self.upper[j] <= self.lower[j]
            {
                continue;
            }
            // x_r moves by −a per unit increase of x_j.
            let ok = match self.state[j] {
                State::AtLower => (a < 0.0) == increase,
                _ => (a > 0.0) == increase,
            };
            if !ok {
                continue;
            }
            let ratio = (self.obj[j] / a).abs();
            let better = match best {
                None => true,
                Some((_, br)) => ratio < br && (br - ratio) > 1e-12 * (1.0 + br),
            };
            if better {
                best = Some((j, ratio));
            }
        }
        best
    }

    /// Basis of all residuals: row `i` reads `−S_i v⁺ + S_i v⁻ + r_i = −s₁ᵢ`.
    fn new(w: &DenseMatrix, m: usize, s1: &[f64], lambda: f64) -> Self {
        let width = 3 * m;
        let n2 = 2 * m;
        let mut data = vec![0.0; m * width];
        let mut lower = vec![0.0; width];
        let mut upper = vec![f64::INFINITY; width];
        let mut state = vec![State::AtLower; width];
        for i in 0..m {
            let s_row = &w.as_slice()[(m + i) * n2..(m + i) * n2 + m];
            let row = &mut data[i * width..(i + 1) * width];
            for j in 0..m {
                row[j] = -s_row[j];
                row[m + j] = s_row[j];
            }
            row[2 * m + i] = 1.0;
            lower[2 * m + i] = -lambda;
            upper[2 * m + i] = lambda;
            state[2 * m + i] = State::Basic;
        }
        Self {
            m,
            width,
            data,
            xb: s1.iter().map(|v| -v).collect(),
            basis: (2 * m..3 * m).collect(),
            state,
            lower,
            upper,
            obj: vec![0.0; width],
            pivots: 0,
        }
    }

    fn load_costs(&mut self, cost: &[f64]) {
        self.obj.copy_from_slice(cost);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.data[i * self.width..(i + 1) * self.width];
            for (o, r) in self.obj.iter_mut().zip(row) {
                *o -= cb * r;
            }
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
        let eliminate = |row: &mut [f64]| {
            let f = row[col];
            if f != 0.0 {
                for (v, &p) in row.iter_mut().zip(prow) {
                    *v -= f * p;
                }
                row[col] = 0.0;
            }
        };
        before.chunks_exact_mut(w).for_each(eliminate);
        after.chunks_exact_mut(w).for_each(eliminate);
        eliminate(&mut self.obj);
        self.basis[r] = col;
        self.pivots += 1;
    }

    fn failed(&self, status: LpStatus) -> LpSolution {
        LpSolution {
            omega: vec![0.0; 2 * self.m],
            objective: 0.0,
            status,
            pivots: self.pivots,
        }
    }

    fn solution(&self) -> LpSolution {
        let n = 2 * self.m;
        let mut omega: Vec<f64> = (0..n)
            .map(|j| match self.state[j] {
                State::AtUpper => self.upper[j],
                _ => self.lower[j],
            })
            .collect();
        for i in 0..self.m {
            if self.basis[i] < n {
                omega[self.basis[i]] = self.xb[i].max(0.0);
            }
        }
        LpSolution {
            objective: omega.iter().sum(),
            omega,
            status: LpStatus::Optimal,
            pivots: self.pivots,
        }
    }
}
