//! Synthetic model specification shared by `simulate` and `bench`.

use serde::{Deserialize, Serialize};
use varlp::datagen::{derive_psi, gen_pattern, make_sigma, make_varp_model, rescale_spectral};
use varlp::varproc::{is_stationary, simulate_stream};
use varlp::{DenseMatrix, PatternKind, SigmaSpec, TimeSeries, VarModel};

use crate::error::{CliError, CliResult};

/// A pattern given either by name (default parameters for the dimension) or
/// as a full object such as `{"kind": "band", "bandwidth": 3}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PatternField {
    Name(String),
    Full(PatternKind),
}

impl PatternField {
    pub fn resolve(&self, d: usize) -> CliResult<PatternKind> {
        match self {
            PatternField::Name(name) => Ok(PatternKind::default_for(name, d)?),
            PatternField::Full(kind) => Ok(*kind),
        }
    }
}

/// `"diagonal"` or a full object such as `{"kind": "toeplitz", "rho": 0.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaField {
    Name(String),
    Full(SigmaSpec),
}

impl Default for SigmaField {
    fn default() -> Self {
        SigmaField::Name("diagonal".into())
    }
}

impl SigmaField {
    pub fn resolve(&self) -> CliResult<SigmaSpec> {
        match self {
            SigmaField::Name(n) if n == "diagonal" || n == "diagonal_scaled" => {
                Ok(SigmaSpec::DiagonalScaled)
            }
            SigmaField::Name(n) => Err(CliError::Config(format!(
                "unknown sigma {n:?}; use \"diagonal\" or {{\"kind\": \"toeplitz\", \"rho\": ..}}"
            ))),
            SigmaField::Full(spec) => Ok(*spec),
        }
    }
}

/// How the noise covariance is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiMode {
    /// Derived from the marginal covariance `sigma` (lag one only).
    Derived,
    /// The identity; `sigma` is ignored.
    Identity,
}

fn one() -> usize {
    1
}

fn half() -> f64 {
    0.5
}

/// Everything needed to draw one synthetic model and series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub pattern: PatternField,
    pub d: usize,
    #[serde(alias = "T")]
    pub t_len: usize,
    #[serde(default = "one")]
    pub p: usize,
    #[serde(default)]
    pub sigma: SigmaField,
    /// Spectral norm of each transition matrix.
    #[serde(default = "half")]
    pub kappa: f64,
    /// `derived` for `p = 1` and `identity` otherwise when absent.
    #[serde(default)]
    pub psi: Option<PsiMode>,
}

impl ModelSpec {
    pub fn psi_mode(&self) -> PsiMode {
        self.psi.unwrap_or(if self.p == 1 {
            PsiMode::Derived
        } else {
            PsiMode::Identity
        })
    }
}

/// Per-lag pattern seed; lag 1 uses the seed itself.
pub fn lag_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Stream used for the series so it never overlaps the pattern draws.
pub const SERIES_STREAM: u64 = 1;

/// Draws the model for `spec` at `seed`.
///
/// In `derived` mode (lag one only) the marginal covariance follows
/// `spec.sigma` and the noise covariance is derived from it. In `identity`
/// mode every lag is rescaled to `kappa` and the noise covariance is the
/// identity.
pub fn generate_model(spec: &ModelSpec, seed: u64) -> CliResult<VarModel> {
    if spec.p == 0 {
        return Err(CliError::Config("p must be at least 1".into()));
    }
    if !(spec.kappa > 0.0) {
        return Err(CliError::Config(format!(
            "kappa = {} must be positive",
            spec.kappa
        )));
    }
    let kind = spec.pattern.resolve(spec.d)?;
    let mode = spec.psi_mode();
    if mode == PsiMode::Derived && spec.p != 1 {
        return Err(CliError::Config("psi = \"derived\" needs p = 1".into()));
    }
    if mode == PsiMode::Derived {
        let a = rescale_spectral(&gen_pattern(&kind, spec.d, seed)?, spec.kappa)?;
        let sigma = make_sigma(&spec.sigma.resolve()?, spec.d, spec.kappa)?;
        let psi = derive_psi(&sigma, &a).map_err(|e| match e {
            varlp::Error::NotPsd { .. } => CliError::NonStationary(format!(
                "no stationary VAR(1) has this marginal covariance: {e}"
            )),
            other => other.into(),
        })?;
        let model = VarModel::new(vec![a], psi)?;
        if !is_stationary(&model) {
            return Err(CliError::NonStationary(format!("kappa = {}", spec.kappa)));
        }
        Ok(model)
    } else {
        let patterns = (0..spec.p)
            .map(|k| gen_pattern(&kind, spec.d, lag_seed(seed, k)))
            .collect::<varlp::Result<Vec<_>>>()?;
        let (model, _) = make_varp_model(&patterns, spec.kappa, &DenseMatrix::identity(spec.d))?;
        Ok(model)
    }
}

pub fn generate_series(spec: &ModelSpec, model: &VarModel, seed: u64) -> CliResult<TimeSeries> {
    Ok(simulate_stream(model, spec.t_len, seed, SERIES_STREAM)?)
}

/// Stacks lag matrices into one `dp × d` block, padding with zero blocks up
/// to `p` lags.
pub fn stack_lags(lags: &[DenseMatrix], p: usize) -> CliResult<DenseMatrix> {
    let d = lags
        .first()
        .map(|a| a.rows())
        .ok_or_else(|| CliError::Input("no lag matrices".into()))?;
    let mut blocks: Vec<DenseMatrix> = lags.to_vec();
    blocks.resize(p.max(lags.len()), DenseMatrix::zeros(d, d));
    Ok(DenseMatrix::vstack(&blocks)?)
}
