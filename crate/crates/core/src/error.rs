use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The grid cannot resolve the requested kernel.
    #[error("resolution guard violated: {0}")]
    Resolution(String),

    /// Two fields live on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A precondition of a checker or experiment does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// An adaptive quadrature did not reach its tolerance.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    /// Fixed-point iteration failed even after step refinement.
    #[error("Picard iteration failed at t = {t}: residuals {residuals:?}")]
    PicardDivergence { t: f64, residuals: Vec<f64> },

    /// Truncated-mode trajectory exceeded the a priori bound.
    #[error("a priori bound violated at t = {t}: sup = {sup}, bound = {bound}")]
    AprioriViolation { t: f64, sup: f64, bound: f64 },

    /// Malformed input data (files, manifests).
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
