use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not Hermitian (max asymmetry {asymmetry:.3e} exceeds {threshold:.3e})")]
    NotHermitian { asymmetry: f64, threshold: f64 },

    #[error("non-finite entry encountered in {0}")]
    NonFinite(&'static str),

    #[error("{routine} did not converge within {iterations} iterations")]
    ConvergenceFailure { routine: &'static str, iterations: usize },

    #[error("Kraus operators are not complete: ||sum K^dag K - 1|| = {deviation:.3e}")]
    IncompleteKraus { deviation: f64 },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("map is not invertible (smallest singular value {smallest_singular_value:.3e})")]
    NonInvertible { smallest_singular_value: f64 },

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("malformed semidefinite program: {0}")]
    MalformedProblem(String),

    #[error("semidefinite program ended with status {0:?}")]
    Solver(crate::sdp::SolveStatus),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(err.to_string())
    }
}
