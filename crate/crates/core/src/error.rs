use thiserror::Error;

use crate::coefficients::EllipticityConstants;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The coefficients fail the ellipticity condition. The extracted
    /// constants are kept for diagnostics.
    #[error("coefficients are not elliptic (mu = {}, M = {})", .constants.mu, .constants.big_m)]
    NonElliptic { constants: EllipticityConstants },

    #[error("requested ratio mu/M = {0} is infeasible (must lie in (0, 1])")]
    InfeasibleRatio(f64),

    #[error("numerical failure in {context} after {iterations} iterations (residual {residual:e})")]
    NumericalFailure {
        context: String,
        iterations: usize,
        residual: f64,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        LabError::InvalidInput(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        LabError::ShapeMismatch(msg.into())
    }
}
