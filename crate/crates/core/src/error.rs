use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("column {column} is constant; ranks carry no dependence information")]
    ConstantColumn { column: usize },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("{operation} does not support the {family} family; use the empirical mode instead")]
    Unsupported {
        operation: &'static str,
        family: &'static str,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Coarse classification used to map errors onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Numerical(_) => ErrorKind::Numerical,
            _ => ErrorKind::Validation,
        }
    }
}
