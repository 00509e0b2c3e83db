use thiserror::Error;

/// Errors raised anywhere in the crate.
///
/// The variants split into two families that the command-line front end maps
/// onto distinct exit codes: bad input (`Validation`, `Io`, `Parse`) and
/// numerical trouble (everything else).
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("eigensolver did not converge after {restarts} restarts (best residuals: {residuals:?})")]
    NoConvergence { restarts: usize, residuals: Vec<f64> },

    #[error("QR iteration failed to converge on a {0}x{0} matrix")]
    QrFailure(usize),

    #[error("degenerate spectrum: {0}")]
    Degenerate(String),

    #[error("series diverges: |z| = {z_abs} does not exceed rho = {rho}")]
    Divergent { z_abs: f64, rho: f64 },

    #[error("eigenvalue matching failed: {0}")]
    Matching(String),

    #[error("all {0} restarts collapsed a covariance matrix")]
    Collapse(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by the caller's input rather than by arithmetic.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_) | Error::Io(_) | Error::Parse(_) | Error::Unsupported(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
