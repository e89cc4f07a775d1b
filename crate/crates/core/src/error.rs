use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("covariance is not available in closed form for model kind `{0}`")]
    UnsupportedKind(&'static str),

    #[error("covariance matrix factorization failed even with jitter {jitter:e}")]
    Factorization { jitter: f64 },

    #[error("need at least {required} paths on a common grid, got {got}")]
    InsufficientPaths { required: usize, got: usize },

    #[error("degenerate interval [{a}, {b}]")]
    DegenerateInterval { a: f64, b: f64 },

    #[error("weighted norm diverges under grid refinement (coarse {coarse}, fine {fine})")]
    NormDivergence { coarse: f64, fine: f64 },

    #[error("Gauss-Hermite quadrature produced a non-finite value at t = {t}")]
    QuadratureOverflow { t: f64 },

    #[error("theta is not square integrable: {0}")]
    NonIntegrableTheta(String),

    #[error("Monte Carlo estimate of {what} failed to stabilize across batches")]
    EntropyDivergence { what: &'static str },

    #[error("budget equation has no bracketing multiplier for w = {w}")]
    NoBracket { w: f64 },

    #[error("condition (A) violated: need 0 < 2*H1 - 1 < H2 <= H1, got H1 = {h1}, H2 = {h2}")]
    ConditionAViolation { h1: f64, h2: f64 },

    #[error("grids do not match: {0}")]
    GridMismatch(String),

    #[error("no run artifacts found in {0}")]
    MissingArtifact(PathBuf),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors that signal a numerical divergence rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Factorization { .. }
                | Error::NormDivergence { .. }
                | Error::QuadratureOverflow { .. }
                | Error::EntropyDivergence { .. }
                | Error::NoBracket { .. }
        )
    }
}
