use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("numerical error: {what} (estimate {estimate:e}, tolerance {tolerance:e})")]
    Numerical {
        what: String,
        estimate: f64,
        tolerance: f64,
    },

    #[error("config error at line {line}, key `{key}`: {msg}")]
    Config { line: usize, key: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(what: impl Into<String>, estimate: f64, tolerance: f64) -> Self {
        Error::Numerical {
            what: what.into(),
            estimate,
            tolerance,
        }
    }
}
