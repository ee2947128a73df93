use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("element does not match its algebra: {0}")]
    ShapeMismatch(String),

    #[error("operands live in different algebras")]
    AlgebraMismatch,

    #[error("operation requires a Hermitian element (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps on a {dim}x{dim} block")]
    EigenNonConvergence { sweeps: usize, dim: usize },

    #[error("invalid interval: a = {a} must be below b = {b}")]
    InvalidInterval { a: f64, b: f64 },

    #[error("malformed norm spec: {0}")]
    MalformedSpec(String),

    #[error("invalid Orlicz function: {0}")]
    InvalidOrlicz(String),

    #[error("Luxemburg bisection could not bracket the norm")]
    BracketFailure,

    #[error("dimension budget exceeded: {0}")]
    Budget(String),

    #[error("index {index} out of range for {len} factors")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("independence check failed: {0}")]
    IndependenceViolated(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
