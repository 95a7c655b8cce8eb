use thiserror::Error;

pub type Result<T> = std::result::Result<T, PmeError>;

#[derive(Debug, Error)]
pub enum PmeError {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Particles touched or crossed: `x[node - 1] >= x[node]`.
    #[error("trajectory left the admissible set at node {node}")]
    NotAdmissible { node: usize },

    #[error("nonpositive deformation gradient {value:e} at node {node}")]
    NonpositiveGradient { node: usize, value: f64 },

    #[error("negative norm weight {value:e} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("zero pivot in tridiagonal solve at row {row}")]
    ZeroPivot { row: usize },

    #[error("assembled matrix violates the M-matrix sign pattern at row {row}")]
    NotMMatrix { row: usize },

    #[error("non-finite coefficient at node {node}")]
    Overflow { node: usize },

    #[error(
        "Newton iteration did not converge after {iterations} iterations \
         (residual {residual:e}, decrement {lambda:e})"
    )]
    NewtonFailed {
        iterations: usize,
        residual: f64,
        lambda: f64,
    },

    #[error("supports overlap by {overlap:e}; the time step is too large")]
    SupportOverlap { overlap: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
