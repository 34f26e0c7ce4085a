use thiserror::Error;

/// Errors raised anywhere in the wall-law pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid roughness profile: {0}")]
    InvalidProfile(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("mesh quality: {0}")]
    MeshQuality(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("coercivity violated: {0}")]
    Coercivity(String),

    #[error("assembled form is not positive definite (epsilon = {epsilon}): {detail}")]
    Indefinite { epsilon: f64, detail: String },

    #[error("linear solver failed after {iterations} iterations (relative residual {residual:e})")]
    SolverFailure {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("point ({x}, {y}) lies outside the mesh")]
    OutsideDomain { x: f64, y: f64 },

    #[error("mesh checksum mismatch: expected {expected}, found {found}")]
    ChecksumMismatch { expected: String, found: String },

    #[error("interface iteration did not converge in {iterations} iterations (last update {last:e})")]
    InterfaceNonConvergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
