use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("{field} out of range: {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("index {index} out of range for grid of {len} nodes")]
    Index { index: usize, len: usize },

    #[error("shape mismatch: expected {expected} values, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("unsupported format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A numerical quantity became non-finite or otherwise unusable.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Broken internal invariant; always a bug in this crate or its caller.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) | Error::Internal(_) => 3,
            _ => 2,
        }
    }
}
