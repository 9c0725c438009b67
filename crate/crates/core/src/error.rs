use thiserror::Error;

/// Errors raised by the polynomial, linear algebra and witness layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("variable index {index} out of range for {n_vars} variables")]
    IndexOutOfRange { index: usize, n_vars: usize },

    #[error("{0}")]
    Parse(#[from] ParseError),

    #[error("zero polynomial has no well-defined roots")]
    ZeroPolynomial,

    #[error("matrix is singular to working precision")]
    SingularMatrix,

    #[error("non-finite value in input")]
    NonFinite,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("slice motion failed: {0}")]
    SliceMotion(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Syntax or semantic error in system text, located by 1-based line and column.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}
