//! Synthetic ground truth: patterned transition matrices, spectral
//! rescaling, marginal covariances and the matching noise covariance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{psd_min_pivot, DenseMatrix, NormKind, PSD_TOL};
use crate::rng::SeededStream;
use crate::varproc::{is_stationary, stationary_covariance, VarModel};

/// Magnitude of every nonzero entry before rescaling.
pub const PATTERN_MAGNITUDE: f64 = 0.5;

/// Sparsity pattern of a generated transition matrix. Every pattern keeps
/// the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PatternKind {
    /// Nonzero where `|i − j| ≤ bandwidth`.
    Band { bandwidth: usize },
    /// Dense diagonal blocks.
    Cluster { block_size: usize },
    /// `hub_count` dense rows and columns, evenly spread.
    Hub { hub_count: usize },
    /// Off-diagonal entries present independently.
    Random { edge_prob: f64 },
    /// Preferential-attachment graph; each new node brings `attach_count`
    /// edges.
    ScaleFree { attach_count: usize },
}

impl PatternKind {
    /// Default parameters for dimension `d`.
    pub fn default_for(name: &str, d: usize) -> Result<Self> {
        Ok(match name {
            "band" => PatternKind::Band { bandwidth: 2 },
            "cluster" => PatternKind::Cluster {
                block_size: (d / 5).max(1),
            },
            "hub" => PatternKind::Hub {
                hub_count: (d / 10).max(1),
            },
            "random" => PatternKind::Random {
                edge_prob: (3.0 / d as f64).min(1.0),
            },
            "scale_free" | "scale-free" | "scalefree" => PatternKind::ScaleFree { attach_count: 2 },
            other => return Err(Error::BadParams(format!("unknown pattern {other:?}"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            PatternKind::Band { .. } => "band",
            PatternKind::Cluster { .. } => "cluster",
            PatternKind::Hub { .. } => "hub",
            PatternKind::Random { .. } => "random",
            PatternKind::ScaleFree { .. } => "scale_free",
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        let ok = match *self {
            PatternKind::Band { bandwidth } => bandwidth >= 1 && bandwidth <= d,
            PatternKind::Cluster { block_size } => block_size >= 1 && block_size <= d,
            PatternKind::Hub { hub_count } => hub_count >= 1 && hub_count <= d,
            PatternKind::Random { edge_prob } => (0.0..=1.0).contains(&edge_prob),
            PatternKind::ScaleFree { attach_count } => attach_count >= 1 && attach_count < d,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::BadParams(format!(
                "{self:?} is not valid for d = {d}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaSpec {
    /// `Σ = 2‖A₁‖₂·I`.
    DiagonalScaled,
    /// `Σ_ij = ρ^|i−j|`.
    Toeplitz { rho: f64 },
}

/// Undirected preferential-attachment edges over `d` nodes.
fn preferential_attachment(d: usize, attach: usize, rng: &mut SeededStream) -> Vec<(usize, usize)> {
    let seed_nodes = attach + 1;
    let mut edges = Vec::new();
    // Each endpoint appears once per incident edge, so a uniform pick from
    // this list is a degree-proportional pick.
    let mut endpoints = Vec::new();
    for i in 0..seed_nodes.min(d) {
        for j in (i + 1)..seed_nodes.min(d) {
            edges.push((i, j));
            endpoints.extend([i, j]);
        }
    }
    for node in seed_nodes..d {
        let mut targets: Vec<usize> = Vec::with_capacity(attach);
        while targets.len() < attach {
            let t = endpoints[rng.uniform_below(endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            edges.push((t, node));
            endpoints.extend([t, node]);
        }
    }
    edges
}

/// Support of the pattern (diagonal included), row-major booleans.
fn support(kind: &PatternKind, d: usize, rng: &mut SeededStream) -> Vec<bool> {
    let mut s = vec![false; d * d];
    for i in 0..d {
        s[i * d + i] = true;
    }
    match *kind {
        PatternKind::Band { bandwidth } => {
            for i in 0..d {
                for j in 0..d {
                    if i.abs_diff(j) <= bandwidth {
                        s[i * d + j] = true;
                    }
                }
            }
        }
        PatternKind::Cluster { block_size } => {
            for i in 0..d {
                for j in 0..d {
                    if i / block_size == j / block_size {
                        s[i * d + j] = true;
                    }
                }
            }
        }
        PatternKind::Hub { hub_count } => {
            for h in 0..hub_count {
                let hub = h * d / hub_count;
                for k in 0..d {
                    s[hub * d + k] = true;
                    s[k * d + hub] = true;
                }
            }
        }
        PatternKind::Random { edge_prob } => {
            for i in 0..d {
                for j in 0..d {
                    if i != j && rng.uniform_open() < edge_prob {
                        s[i * d + j] = true;
                    }
                }
            }
        }
        PatternKind::ScaleFree { attach_count } => {
            for (a, b) in preferential_attachment(d, attach_count, rng) {
                s[a * d + b] = true;
                s[b * d + a] = true;
            }
        }
    }
    s
}

/// Patterned matrix with entries `±0.5` on its support, signs uniform from
/// the seeded stream.
pub fn gen_pattern(kind: &PatternKind, d: usize, seed: u64) -> Result<DenseMatrix> {
    if d < 2 {
        return Err(Error::BadParams(format!(
            "pattern dimension {d} must be at least 2"
        )));
    }
    kind.validate(d)?;
    let mut rng = SeededStream::new(seed, 0);
    let supp = support(kind, d, &mut rng);
    let data = supp
        .into_iter()
        .map(|on| {
            if !on {
                0.0
            } else if rng.coin() {
                PATTERN_MAGNITUDE
            } else {
                -PATTERN_MAGNITUDE
            }
        })
        .collect();
    DenseMatrix::new(d, d, data)
}

/// Scales `a` so that its spectral norm equals `kappa`.
pub fn rescale_spectral(a: &DenseMatrix, kappa: f64) -> Result<DenseMatrix> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::BadParams(format!(
            "target spectral norm {kappa} must be positive"
        )));
    }
    let norm = a.norm(NormKind::Spectral);
    if norm == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(a.scale(kappa / norm))
}

pub fn make_sigma(spec: &SigmaSpec, d: usize, a1_norm2: f64) -> Result<DenseMatrix> {
    if d == 0 {
        return Err(Error::BadParams("dimension must be positive".into()));
    }
    match *spec {
        SigmaSpec::DiagonalScaled => {
            if !(a1_norm2 > 0.0) {
                return Err(Error::BadParams(format!(
                    "‖A₁‖₂ = {a1_norm2} must be positive"
                )));
            }
            Ok(DenseMatrix::scaled_identity(d, 2.0 * a1_norm2))
        }
        SigmaSpec::Toeplitz { rho } => {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(Error::BadParams(format!(
                    "Toeplitz ρ = {rho} must lie in (0, 1)"
                )));
            }
            DenseMatrix::from_fn(d, d, |i, j| rho.powi(i.abs_diff(j) as i32))
        }
    }
}

/// Noise covariance `Ψ = Σ − A₁ᵀΣA₁` making `Σ` the stationary covariance
/// of the VAR(1) model with transition `A₁`.
pub fn derive_psi(sigma: &DenseMatrix, a1: &DenseMatrix) -> Result<DenseMatrix> {
    if !sigma.is_square() || a1.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch(format!(
            "Σ is {:?}, A₁ is {:?}",
            sigma.shape(),
            a1.shape()
        )));
    }
    let psi = sigma
        .sub(&a1.t_matmul(&sigma.matmul(a1)?)?)?
        .symmetrized()?;
    let min_pivot = psd_min_pivot(&psi)?;
    if min_pivot < -PSD_TOL {
        return Err(Error::NotPsd { min_pivot });
    }
    Ok(psi)
}

/// Builds a VAR(p) model whose lag matrices are the given patterns rescaled
/// to spectral norm `kappa_per_lag`, together with its stationary
/// covariance `Σ̃`.
pub fn make_varp_model(
    patterns: &[DenseMatrix],
    kappa_per_lag: f64,
    psi: &DenseMatrix,
) -> Result<(VarModel, DenseMatrix)> {
    let lags = patterns
        .iter()
        .map(|a| rescale_spectral(a, kappa_per_lag))
        .collect::<Result<Vec<_>>>()?;
    let model = VarModel::new(lags, psi.clone())?;
    if !is_stationary(&model) {
        return Err(Error::NotStationary);
    }
    let sigma = stationary_covariance(&model)?;
    Ok((model, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn support_of(m: &DenseMatrix) -> Vec<bool> {
        m.as_slice().iter().map(|&v| v != 0.0).collect()
    }

    #[test]
    fn band_support_and_magnitudes() {
        let a = gen_pattern(&PatternKind::Band { bandwidth: 1 }, 3, 5).unwrap();
        for i in 0..3usize {
            for j in 0..3 {
                let on = i.abs_diff(j) <= 1;
                assert_eq!(a.get(i, j) != 0.0, on, "({i},{j})");
                if on {
                    assert_eq!(a.get(i, j).abs(), PATTERN_MAGNITUDE);
                }
            }
        }
    }

    #[test]
    fn random_with_zero_probability_is_diagonal() {
        let a = gen_pattern(&PatternKind::Random { edge_prob: 0.0 }, 6, 1).unwrap();
        let diag: Vec<bool> = (0..36).map(|k| k / 6 == k % 6).collect();
        assert_eq!(support_of(&a), diag);
    }

    #[test]
    fn cluster_and_hub_supports() {
        let c = gen_pattern(&PatternKind::Cluster { block_size: 2 }, 5, 3).unwrap();
        assert_ne!(c.get(0, 1), 0.0);
        assert_eq!(c.get(1, 2), 0.0);
        assert_ne!(c.get(4, 4), 0.0);
        let h = gen_pattern(&PatternKind::Hub { hub_count: 1 }, 4, 3).unwrap();
        assert!((0..4).all(|k| h.get(0, k) != 0.0 && h.get(k, 0) != 0.0));
        assert_eq!(h.get(1, 2), 0.0);
        assert_ne!(h.get(2, 2), 0.0);
    }

    #[test]
    fn scale_free_support_is_symmetric_tree() {
        let a = gen_pattern(&PatternKind::ScaleFree { attach_count: 1 }, 30, 9).unwrap();
        let mut off = 0;
        for i in 0..30 {
            for j in 0..30 {
                assert_eq!(a.get(i, j) != 0.0, a.get(j, i) != 0.0);
                off += (i != j && a.get(i, j) != 0.0) as usize;
            }
        }
        // A tree on 30 nodes has 29 edges, each stored twice.
        assert_eq!(off, 58);
    }

    #[test]
    fn bad_params_rejected() {
        assert!(gen_pattern(&PatternKind::Band { bandwidth: 0 }, 5, 0).is_err());
        assert!(gen_pattern(&PatternKind::Random { edge_prob: 1.5 }, 5, 0).is_err());
        assert!(gen_pattern(&PatternKind::Band { bandwidth: 1 }, 1, 0).is_err());
        assert!(PatternKind::default_for("lattice", 10).is_err());
    }

    #[test]
    fn rescale_cases() {
        let out = rescale_spectral(&DenseMatrix::identity(3), 0.5).unwrap();
        assert!(
            out.max_abs_diff(&DenseMatrix::scaled_identity(3, 0.5))
                .unwrap()
                < 1e-15
        );
        let again = rescale_spectral(&out, 0.5).unwrap();
        assert!(again.max_abs_diff(&out).unwrap() < 1e-12);
        assert_eq!(
            rescale_spectral(&DenseMatrix::zeros(2, 2), 0.5),
            Err(Error::ZeroMatrix)
        );
    }

    #[test]
    fn sigma_constructions() {
        assert_eq!(
            make_sigma(&SigmaSpec::DiagonalScaled, 4, 0.5).unwrap(),
            DenseMatrix::identity(4)
        );
        let t = make_sigma(&SigmaSpec::Toeplitz { rho: 0.5 }, 3, 0.5).unwrap();
        let expect = DenseMatrix::from_rows(&[
            vec![1.0, 0.5, 0.25],
            vec![0.5, 1.0, 0.5],
            vec![0.25, 0.5, 1.0],
        ])
        .unwrap();
        assert_eq!(t, expect);
        let tiny = make_sigma(&SigmaSpec::Toeplitz { rho: 1e-300 }, 3, 0.5).unwrap();
        assert!(tiny.max_abs_diff(&DenseMatrix::identity(3)).unwrap() < 1e-299);
        assert!(make_sigma(&SigmaSpec::Toeplitz { rho: 1.0 }, 3, 0.5).is_err());
    }

    #[test]
    fn derive_psi_cases() {
        let sigma = DenseMatrix::identity(3);
        assert_eq!(
            derive_psi(&sigma, &DenseMatrix::zeros(3, 3)).unwrap(),
            sigma
        );
        let psi = derive_psi(&sigma, &DenseMatrix::scaled_identity(3, 0.5)).unwrap();
        assert!(
            psi.max_abs_diff(&DenseMatrix::scaled_identity(3, 0.75))
                .unwrap()
                < 1e-15
        );
        let err = derive_psi(&sigma, &DenseMatrix::scaled_identity(3, 1.5)).unwrap_err();
        assert!(matches!(err, Error::NotPsd { .. }));
    }
}
