//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BicmError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("degenerate prior: {0}")]
    DegeneratePrior(String),

    #[error("pilot design error: {0}")]
    PilotDesign(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl BicmError {
    /// Process exit code: 2 for configuration problems, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            BicmError::InvalidInput(_)
            | BicmError::Config(_)
            | BicmError::DimensionMismatch(_)
            | BicmError::PilotDesign(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, BicmError>;
