use thiserror::Error;

/// Errors produced by the geometry, solver and training routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("not a strictly positive distribution: {0}")]
    NotInterior(String),

    #[error("not a tangent vector: {0}")]
    NotTangent(String),

    #[error("alpha must lie in [-1, 1], got {0}")]
    AlphaOutOfRange(f64),

    #[error("operands carry different geometries (alpha {0} vs {1})")]
    AlphaMismatch(f64, f64),

    #[error("operation not available at alpha = {alpha}: {reason}")]
    UnsupportedAlpha { alpha: f64, reason: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("trajectory left the positive orthant at tau = {tau:.6}")]
    PositivityViolated { tau: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("shooting bracket exhausted: tau(1) - 1 keeps sign {sign} on [{lo}, {hi}]")]
    BracketExhausted { lo: f64, hi: f64, sign: f64 },

    #[error("shooting did not reach tolerance: |tau(1) - 1| = {residual:.3e}")]
    NotConverged { residual: f64 },

    #[error("reparameterization is not monotone")]
    NonMonotone,

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("model format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics themselves (solver breakdown, divergence,
    /// leaving the chart), as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::PositivityViolated { .. }
                | Error::NonFinite(_)
                | Error::BracketExhausted { .. }
                | Error::NotConverged { .. }
                | Error::NonMonotone
                | Error::Diverged { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
