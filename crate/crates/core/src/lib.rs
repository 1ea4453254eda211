//! Sparse vector autoregression estimation by column-wise linear programs.
//!
//! The crate covers dense linear algebra, a two-phase simplex solver, VAR(p)
//! processes and their stationary covariances, sample covariances, the direct
//! LP estimator with lasso and ridge baselines, evaluation and
//! cross-validation, and synthetic model generation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covest;
pub mod datagen;
pub mod error;
pub mod estimators;
pub mod eval;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod rng;
pub mod varproc;

pub use covest::{sample_covariances, CovPair};
pub use datagen::{PatternKind, SigmaSpec};
pub use error::{Error, Result};
pub use estimators::{DirectEstimate, Fit, LassoEstimate, Method, TuningInputs};
pub use eval::{CvResult, ErrorReport, GridPoint, SignMetrics};
pub use linalg::{DenseMatrix, NormKind};
pub use lp::{ColumnLp, LpSolution, LpStatus};
pub use varproc::{TimeSeries, VarModel};

/// Version tag carried by every serialized artifact.
pub const SPEC_VERSION: &str = "1.0";
