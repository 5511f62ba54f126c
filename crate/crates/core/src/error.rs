use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("B^T B is singular (lambda_min = {lambda_min:e}); B must have full column rank")]
    SingularGram { lambda_min: f64 },

    #[error(
        "gamma = {gamma} does not exceed the required bound {bound} \
         ((sqrt(57)+1)/(2 lambda_min(B^T B)) * (L_G + L_H))"
    )]
    GammaTooSmall { gamma: f64, bound: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("numerical breakdown at iteration {iteration}: {detail}")]
    NumericalBreakdown { iteration: usize, detail: String },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("trace error: {0}")]
    Trace(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
