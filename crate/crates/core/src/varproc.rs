//! VAR(p) models `X_t = Σ_k A_kᵀ X_{t−k} + Z_t`, their companion (lag-one)
//! form, stationary covariances and exact simulation.

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky, spectral_radius_bound, DenseMatrix, DEFAULT_RADIUS_POWER, RESIDUAL_TOL,
};
use crate::rng::SeededStream;

/// Margin below one required of the spectral-radius bound.
pub const STATIONARITY_MARGIN: f64 = 1e-6;
pub const LYAPUNOV_TOL: f64 = 1e-12;
pub const LYAPUNOV_MAX_ITER: usize = 100_000;
/// Steps discarded when the stationary covariance cannot be factorized.
pub const BURN_IN: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    transitions: Vec<DenseMatrix>,
    noise_cov: DenseMatrix,
}

impl VarModel {
    pub fn new(transitions: Vec<DenseMatrix>, noise_cov: DenseMatrix) -> Result<Self> {
        let first = transitions
            .first()
            .ok_or_else(|| Error::BadParams("a VAR model needs at least one lag".into()))?;
        let d = first.rows();
        if transitions.iter().any(|a| a.shape() != (d, d)) {
            return Err(Error::DimensionMismatch(
                "transition matrices must all be d x d".into(),
            ));
        }
        if noise_cov.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "noise covariance is {:?}, expected {d}x{d}",
                noise_cov.shape()
            )));
        }
        let tol = 1e-10 * noise_cov.max_abs();
        for i in 0..d {
            for j in (i + 1)..d {
                if (noise_cov.get(i, j) - noise_cov.get(j, i)).abs() > tol {
                    return Err(Error::BadParams("noise covariance is not symmetric".into()));
                }
            }
        }
        Ok(Self {
            transitions,
            noise_cov,
        })
    }

    pub fn p(&self) -> usize {
        self.transitions.len()
    }

    pub fn dim(&self) -> usize {
        self.noise_cov.rows()
    }

    pub fn transitions(&self) -> &[DenseMatrix] {
        &self.transitions
    }

    pub fn noise_cov(&self) -> &DenseMatrix {
        &self.noise_cov
    }

    /// `A = (A₁ᵀ, …, A_pᵀ)ᵀ`, the dp×d stack of transition matrices.
    pub fn stacked(&self) -> DenseMatrix {
        DenseMatrix::vstack(&self.transitions).expect("equal widths")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompanionForm {
    pub a_tilde: DenseMatrix,
    pub psi_tilde: DenseMatrix,
}

/// A T×d block of observations; row `t` holds `X_{t+1}ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    t_len: usize,
    dim: usize,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t_len: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if t_len == 0 || dim == 0 {
            return Err(Error::Empty);
        }
        if values.len() != t_len * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {t_len}x{dim} series",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self { t_len, dim, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch("ragged series rows".into()));
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Observation at zero-based index `t`.
    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    /// Consecutive observations `start..start + len` (zero-based).
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.t_len {
            return Err(Error::DimensionMismatch(format!(
                "window {start}..{} of a series of length {}",
                start + len,
                self.t_len
            )));
        }
        Ok(Self {
            t_len: len,
            dim: self.dim,
            values: self.values[start * self.dim..(start + len) * self.dim].to_vec(),
        })
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.t_len,
            self.dim,
            self.values.iter().map(|v| v * c).collect(),
        )
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_raw(self.t_len, self.dim, self.values.clone())
    }
}

/// Companion form: `Ã` carries `A₁..A_p` down its first block column and
/// identities on the block superdiagonal; `Ψ̃` holds `Ψ` in its top-left
/// block.
pub fn augment(model: &VarModel) -> CompanionForm {
    let d = model.dim();
    let p = model.p();
    let n = d * p;
    let mut a = DenseMatrix::zeros(n, n);
    for (k, ak) in model.transitions.iter().enumerate() {
        for i in 0..d {
            for j in 0..d {
                a.set(k * d + i, j, ak.get(i, j));
            }
        }
        if k + 1 < p {
            for i in 0..d {
                a.set(k * d + i, (k + 1) * d + i, 1.0);
            }
        }
    }
    let mut psi = DenseMatrix::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            psi.set(i, j, model.noise_cov.get(i, j));
        }
    }
    CompanionForm {
        a_tilde: a,
        psi_tilde: psi,
    }
}

pub fn is_stationary(model: &VarModel) -> bool {
    let comp = augment(model);
    match spectral_radius_bound(&comp.a_tilde, DEFAULT_RADIUS_POWER) {
        Ok(r) => r < 1.0 - STATIONARITY_MARGIN,
        Err(_) => false,
    }
}

/// `ÃᵀXÃ` for a companion matrix, using its structure: first block column
/// `stack` (dp×d), shifted identities elsewhere.
fn companion_congruence(x: &[f64], stack: &DenseMatrix, d: usize, p: usize) -> Vec<f64> {
    let n = d * p;
    // Y = X·Ã
    let mut y = vec![0.0; n * n];
    for i in 0..n {
        let xr = &x[i * n..(i + 1) * n];
        let yr = &mut y[i * n..(i + 1) * n];
        for (l, &xv) in xr.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            for (yv, sv) in yr[..d].iter_mut().zip(stack.row(l)) {
                *yv += xv * sv;
            }
        }
        yr[d..].copy_from_slice(&xr[..n - d]);
    }
    // Z = Ãᵀ·Y
    let mut z = vec![0.0; n * n];
    for l in 0..n {
        let yr = &y[l * n..(l + 1) * n];
        for (i, &sv) in stack.row(l).iter().enumerate() {
            if sv == 0.0 {
                continue;
            }
            let zr = &mut z[i * n..(i + 1) * n];
            for (zv, yv) in zr.iter_mut().zip(yr) {
                *zv += sv * yv;
            }
        }
    }
    z[d * n..].copy_from_slice(&y[..(n - d) * n]);
    z
}

/// Stationary covariance `Σ̃` of the companion process: the solution of
/// `ÃᵀΣ̃Ã − Σ̃ + Ψ̃ = 0`, by the fixed-point iteration
/// `Σ̃ ← ÃᵀΣ̃Ã + Ψ̃` started at `Ψ̃`.
pub fn stationary_covariance(model: &VarModel) -> Result<DenseMatrix> {
    if !is_stationary(model) {
        return Err(Error::NotStationary);
    }
    let d = model.dim();
    let p = model.p();
    let n = d * p;
    let stack = model.stacked();
    let psi = augment(model).psi_tilde;
    let mut sigma = psi.as_slice().to_vec();
    let mut converged = false;
    for _ in 0..LYAPUNOV_MAX_ITER {
        let mut next = companion_congruence(&sigma, &stack, d, p);
        for (v, q) in next.iter_mut().zip(psi.as_slice()) {
            *v += q;
        }
        let delta = next
            .iter()
            .zip(&sigma)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        sigma = next;
        if !delta.is_finite() {
            return Err(Error::NotStationary);
        }
        if delta < LYAPUNOV_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: LYAPUNOV_MAX_ITER,
        });
    }
    let sigma = DenseMatrix::new(n, n, sigma)?.symmetrized()?;
    let residual = lyapunov_residual_with(&sigma, &stack, &psi, d, p);
    if residual >= RESIDUAL_TOL * sigma.max_abs().max(1.0) {
        return Err(Error::NoConvergence {
            iterations: LYAPUNOV_MAX_ITER,
        });
    }
    Ok(sigma)
}

fn lyapunov_residual_with(
    sigma: &DenseMatrix,
    stack: &DenseMatrix,
    psi: &DenseMatrix,
    d: usize,
    p: usize,
) -> f64 {
    let c = companion_congruence(sigma.as_slice(), stack, d, p);
    c.iter()
        .zip(sigma.as_slice())
        .zip(psi.as_slice())
        .fold(0.0_f64, |m, ((a, s), q)| m.max((a - s + q).abs()))
}

/// `‖ÃᵀΣ̃Ã − Σ̃ + Ψ̃‖_max` for a candidate stationary covariance.
pub fn lyapunov_residual(model: &VarModel, sigma: &DenseMatrix) -> Result<f64> {
    let n = model.dim() * model.p();
    if sigma.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!("Σ̃ must be {n}x{n}")));
    }
    let psi = augment(model).psi_tilde;
    Ok(lyapunov_residual_with(
        sigma,
        &model.stacked(),
        &psi,
        model.dim(),
        model.p(),
    ))
}

/// Population lag-one autocovariance `Σ̃₁ = Σ̃·Ã`.
pub fn lag1_autocov(sigma: &DenseMatrix, a_tilde: &DenseMatrix) -> Result<DenseMatrix> {
    sigma.matmul(a_tilde)
}

/// Draws `X_1..X_T`. The first `p` observations are sampled jointly from the
/// stationary law `N(0, Σ̃)`; later ones follow the recursion with Gaussian
/// innovations `Z_t = chol(Ψ)·η_t`.
pub fn simulate(model: &VarModel, t_len: usize, seed: u64) -> Result<TimeSeries> {
    simulate_stream(model, t_len, seed, 0)
}

/// [`simulate`] on an explicit random stream, for replicate `stream` of a
/// study sharing one seed.
pub fn simulate_stream(
    model: &VarModel,
    t_len: usize,
    seed: u64,
    stream: u64,
) -> Result<TimeSeries> {
    let d = model.dim();
    let p = model.p();
    if t_len < p || t_len == 0 {
        return Err(Error::SeriesTooShort { t_len, p });
    }
    let noise_chol = cholesky(&model.noise_cov)?;
    let sigma = stationary_covariance(model)?;
    let mut rng = SeededStream::new(seed, stream);

    let n = d * p;
    let mut eta = vec![0.0; n.max(d)];
    let mut step = |history: &[f64], rng: &mut SeededStream, out: &mut [f64]| {
        // history holds the previous p observations, oldest first.
        rng.fill_normal(&mut eta[..d]);
        let z = noise_chol.mat_vec(&eta[..d]).expect("shape");
        out.copy_from_slice(&z);
        for (k, ak) in model.transitions.iter().enumerate() {
            let lagged = &history[(p - 1 - k) * d..(p - k) * d];
            let contrib = ak.t_mat_vec(lagged).expect("shape");
            for (o, c) in out.iter_mut().zip(contrib) {
                *o += c;
            }
        }
    };

    let mut values = vec![0.0; t_len * d];
    match cholesky(&sigma) {
        Ok(l) => {
            let mut init = vec![0.0; n];
            rng.fill_normal(&mut init);
            let state = l.mat_vec(&init)?;
            // The augmented state stacks X_p, X_{p−1}, …, X_1.
            for k in 0..p {
                values[k * d..(k + 1) * d].copy_from_slice(&state[(p - 1 - k) * d..(p - k) * d]);
            }
        }
        Err(Error::NotPositiveDefinite { .. }) => {
            let mut history = vec![0.0; n];
            let mut next = vec![0.0; d];
            for _ in 0..BURN_IN {
                step(&history, &mut rng, &mut next);
                history.copy_within(d.., 0);
                history[n - d..].copy_from_slice(&next);
            }
            values[..n].copy_from_slice(&history);
        }
        Err(e) => return Err(e),
    }
    let mut next = vec![0.0; d];
    for t in p..t_len {
        let history = &values[(t - p) * d..t * d];
        step(history, &mut rng, &mut next);
        values[t * d..(t + 1) * d].copy_from_slice(&next);
    }
    TimeSeries::new(t_len, d, values)
}
