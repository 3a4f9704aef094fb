use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by every layer of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension n = {0}: the Paneitz operator needs n >= 5")]
    Dimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field length {got} does not match manifold node count {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("Paneitz symbol is not coercive: P({mode}) = {value:e} <= 0")]
    NotCoercive { mode: f64, value: f64 },

    #[error("matrix is not self-adjoint in the weighted inner product (defect {defect:e})")]
    Asymmetric { defect: f64 },

    #[error("quadrature weight {index} is not positive ({value:e})")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("operator is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("constant identity violated: P(1) differs from (n-4)/2 * Q0 by {defect:e}")]
    ConstantIdentity { defect: f64 },

    #[error("{what} must be positive, but node {index} has value {value:e}")]
    Positivity {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error(
        "positivity lost at t = {t} on node {index} (u = {value:e}); retry with dt <= {suggested_dt:e}"
    )]
    PositivityLoss {
        t: f64,
        index: usize,
        value: f64,
        suggested_dt: f64,
    },

    #[error("E_f increased from {before:e} to {after:e} at t = {t}; integrator failure")]
    Divergence { t: f64, before: f64, after: f64 },

    #[error("unsupported manifold kind for {0}")]
    UnsupportedKind(&'static str),

    #[error("least-squares fit residual {residual:e} exceeds threshold {threshold:e}")]
    FitResidual { residual: f64, threshold: f64 },

    #[error("certificate margin is not positive ({margin:e}): {reason}")]
    MarginNotPositive { margin: f64, reason: String },

    #[error("{0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
