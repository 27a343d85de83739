use thiserror::Error;

/// Errors raised by model construction, solvers and file I/O.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid parameters, options or configuration content.
    #[error("configuration error: {0}")]
    Config(String),

    /// A matrix or vector does not have the expected shape.
    #[error("dimension mismatch in {name}: expected {expected}, got {actual}")]
    Dimension {
        name: String,
        expected: String,
        actual: String,
    },

    /// The nonlinearity (or another user-supplied map) produced a
    /// non-finite value.
    #[error("non-finite evaluation at t = {t}, point = {point:?}")]
    Evaluation { t: f64, point: Vec<f64> },

    /// An operation was invoked on input it does not accept.
    #[error("usage error: {0}")]
    Usage(String),

    /// Configuration text failed to parse.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn dim(name: &str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Dimension {
            name: name.to_string(),
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
