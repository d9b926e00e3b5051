use thiserror::Error;

/// Errors raised by construction and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("jet shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("division by a value with zero constant term")]
    DivisionByZero,

    #[error("argument {re}{im:+}i lies on or too close to the branch cut (-inf, 0]")]
    BranchCut { re: f64, im: f64 },

    #[error("argument magnitude {0:e} is below the branch floor")]
    BelowBranchFloor(f64),

    #[error("non-finite value produced")]
    NonFinite,

    #[error("index ({0}, {1}) out of range for dimension {2}")]
    IndexOutOfRange(usize, usize, usize),

    #[error("vector is not isotropic: |u^T u| = {0:e}")]
    NotIsotropic(f64),

    #[error("zero vector")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported eigenvalue case (lambda = {lambda}, mu = {mu})")]
    UnsupportedCase { lambda: String, mu: String },

    #[error("exponent 1 - lambda/mu is not a real rational number")]
    NonRationalExponent,

    #[error("invalid flag partition: {0}")]
    InvalidPartition(String),

    #[error("iteration depth {0} exceeds the configured cap {1}")]
    DepthExceeded(usize, usize),

    #[error("matrix fails the eigen-matrix conditions: {0}")]
    InvalidEigenMatrix(String),

    #[error("only {accepted} of {wanted} sample points accepted after {attempts} attempts")]
    SamplesExhausted { accepted: usize, wanted: usize, attempts: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
