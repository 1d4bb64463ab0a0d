use thiserror::Error;

/// Errors raised by model evaluation, fitting, estimation and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} is singular or ill-conditioned (condition number {condition:.3e})")]
    Singular { what: &'static str, condition: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e}){hint}")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        hint: &'static str,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no finite root: {0}")]
    NoFiniteRoot(String),

    #[error("numerical overflow: {0}")]
    Overflow(String),

    #[error("{0}")]
    Aborted(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
