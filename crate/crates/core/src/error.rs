//! Error type shared across the crate, with the process exit-code mapping
//! used by the command-line interface.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or invalid input data (files, knots, parameters).
    #[error("input error: {0}")]
    Input(String),
    /// Argument outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical guard tripped (singularity leak, degenerate planning).
    #[error("numerical guard: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit code: 2 for input/domain problems, 3 for numerical guards.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Numerical(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
