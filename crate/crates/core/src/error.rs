use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum GkeError {
    #[error("matrix is not Hermitian: relative asymmetry {asymmetry:e} exceeds {limit:e}")]
    NotHermitian { asymmetry: f64, limit: f64 },

    #[error("matrix is not positive definite: smallest eigenvalue {eig_min:e}")]
    NotPositiveDefinite { eig_min: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigensolver did not converge on matrix {fingerprint}")]
    EigenNonConvergence { fingerprint: String },

    #[error("eigenvalue {eigenvalue:e} lies outside the domain of {function}")]
    Domain { eigenvalue: f64, function: String },

    #[error("matrix is numerically singular (condition number {condition:e})")]
    Singular { condition: f64 },

    #[error("{0}")]
    Range(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("solver did not converge: {0}")]
    Solver(Box<SolverFailure>),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Diagnostics attached to a non-converged solve.
#[derive(Debug, Clone)]
pub struct SolverFailure {
    pub context: String,
    pub iterations: usize,
    pub final_residual: f64,
    pub tolerance: f64,
    pub restarts: usize,
}

impl std::fmt::Display for SolverFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: residual {:e} > tolerance {:e} after {} iterations ({} step halvings)",
            self.context, self.final_residual, self.tolerance, self.iterations, self.restarts
        )
    }
}

pub type Result<T> = std::result::Result<T, GkeError>;
