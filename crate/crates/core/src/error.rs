use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("parameter `{name}` out of range: {value}")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("index out of range: {index} not in 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("time index {index} lies in the undefined prefix (needs index >= {required})")]
    UndefinedPrefix { index: usize, required: usize },

    #[error("singular normal equations with ridge = 0; use a ridge coefficient > 0")]
    SingularSystem,

    #[error("{0}")]
    Unsupported(String),

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by invalid user input rather than runtime failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::OutOfRange { .. }
                | Error::IndexOutOfRange { .. }
                | Error::Unsupported(_)
                | Error::DimensionMismatch { .. }
                | Error::UndefinedPrefix { .. }
        )
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
