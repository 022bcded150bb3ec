use thiserror::Error;

/// Errors raised while building problems or running the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DcError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("spectral bound did not converge after {iterations} iterations (best estimate {estimate:e})")]
    SpectralNotConverged { estimate: f64, iterations: usize },

    #[error("linesearch modulus {modulus:e} exceeded the cap {cap:e} at iteration {iteration}")]
    LinesearchFailure {
        iteration: usize,
        modulus: f64,
        cap: f64,
    },

    #[error("iterate became non-finite at iteration {iteration}")]
    Diverged { iteration: usize },
}

pub type Result<T> = std::result::Result<T, DcError>;

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(DcError::DimensionMismatch {
            context,
            expected,
            actual,
        });
    }
    Ok(())
}
