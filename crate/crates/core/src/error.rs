//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operands defined over different bases: {0}")]
    BasisMismatch(String),

    #[error("singular input: {0}")]
    SingularInput(String),

    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),

    #[error("model inconsistency: {0}")]
    ModelInconsistency(String),

    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("time step too large: {0}")]
    DtTooLarge(String),

    #[error("precision loss: {0}")]
    Precision(String),

    #[error("undefined fidelity: {0}")]
    UndefinedFidelity(String),

    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
