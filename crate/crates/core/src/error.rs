use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unsupported dimension: n_eigen = {0} (quadrature supports at most 3)")]
    UnsupportedDimension(usize),

    #[error("quadrature did not reach tolerance (best estimate {estimate:e}, error {error:e})")]
    Accuracy { estimate: f64, error: f64 },

    #[error("ill-conditioned evaluation: {0}")]
    Conditioning(String),

    #[error("pole collision near t = {t} (separation {separation:e})")]
    Collision { t: f64, separation: f64 },

    #[error("evaluation point coincides with a pole: {0}")]
    PoleEvaluation(String),

    #[error("integration failed at {at}: {reason}")]
    Integration { at: f64, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("branch tracking failed: {0}")]
    Gauge(String),

    #[error("solver failed after {iterations} iterations (residual {residual:e})")]
    Solver {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<(f64, f64)>,
    },

    #[error("x_far = {x_far} is outside the asymptotic regime")]
    AsymptoticRegime { x_far: f64 },

    #[error("outside validity domain: {0}")]
    OutOfValidity(String),

    #[error("empty sample batch")]
    EmptyBatch,

    #[error("I/O: {0}")]
    Io(String),
}

impl LabError {
    pub fn param(msg: impl Into<String>) -> Self {
        LabError::Parameter(msg.into())
    }

    /// True for errors caused by bad input rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            LabError::Parameter(_)
                | LabError::UnsupportedDimension(_)
                | LabError::OutOfValidity(_)
                | LabError::EmptyBatch
        )
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
