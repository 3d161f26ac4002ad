use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("eigen-index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error("invalid slope band ({a}, {b})")]
    InvalidBand { a: f64, b: f64 },

    #[error("eigenvalue lambda_{index} = {lambda} lies within {gap_tol:e} of band endpoint {endpoint}")]
    EigenvalueOnBoundary {
        index: usize,
        lambda: f64,
        endpoint: f64,
        gap_tol: f64,
    },

    #[error("nonlinearity slope range [{lo}, {hi}] is not inside the band [{a}, {b}]")]
    SlopeOutsideBand { lo: f64, hi: f64, a: f64, b: f64 },

    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("contraction did not converge in {iterations} iterations (last step {last_step:e})")]
    MaxIterExceeded { iterations: usize, last_step: f64 },

    #[error("fiber dimension is {actual}, operation needs {expected}")]
    FiberDimMismatch { expected: usize, actual: usize },

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("derived slope b = {b} is within tolerance of eigenvalue {eigenvalue}")]
    ResonantB { b: f64, eigenvalue: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
