use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero field cannot be normalized")]
    ZeroField,

    #[error("antisymmetrized product of identical orbitals vanishes")]
    PauliExclusion,

    #[error("eigensolver failed: {0}")]
    EigenSolver(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("non-finite value detected at time node {node}")]
    NonFinite { node: usize },

    #[error("degenerate weight: half-grid weight {value:e} at bond {bond} is below {threshold:e}")]
    DegenerateWeight { bond: usize, value: f64, threshold: f64 },

    #[error("incompatible right-hand side: integral {integral:e} exceeds tolerance {tolerance:e}")]
    IncompatibleRhs { integral: f64, tolerance: f64 },

    #[error("initial state incompatible with target density: {0}")]
    IncompatibleInitialState(String),

    #[error("negative density entry {value:e} at index {index}")]
    NegativeDensity { index: usize, value: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("malformed DPMF data: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
