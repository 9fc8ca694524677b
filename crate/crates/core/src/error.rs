use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported dimension d = {0}")]
    UnsupportedDimension(usize),

    #[error("eigenvalue iteration did not converge")]
    EigenNoConvergence,

    #[error("semidefinite program is infeasible: {0}")]
    Infeasible(String),

    #[error("semidefinite solver stopped without convergence: {0}")]
    SolverFailure(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("optical network: {0}")]
    Network(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}
