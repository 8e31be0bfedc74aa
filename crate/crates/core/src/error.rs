use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The input did not parse against the file schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// The input parsed but breaks an invariant.
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    /// A numeric argument is outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("infeasible starting solution: {0}")]
    Infeasible(String),

    #[error("enumeration needs {required} combinations but the guard is {guard}")]
    GuardExceeded { required: u128, guard: u128 },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation { field: field.into(), reason: reason.into() }
    }
}
