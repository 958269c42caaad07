//! Error type shared across the crate, with the CLI exit-code mapping.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid mathematical input: off-hyperbola exponents, negative radii,
    /// divergent-integral prechecks, malformed geometry documents.
    #[error("domain error: {0}")]
    Domain(String),

    /// The shooting solver could not produce a ground state.
    #[error("solver failure: {0}")]
    Solver(String),

    /// A quadrature did not converge to the requested tolerance.
    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit code: 2 validation, 3 solver, 4 quadrature.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Solver(_) => 3,
            Error::Quadrature(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
