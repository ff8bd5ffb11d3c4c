use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("Cholesky factorization failed (jitter escalated to {jitter:e})")]
    Factorization { jitter: f64 },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("unknown task `{0}`")]
    UnknownTask(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("run failed at step {step}: {source}")]
    Run {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            function,
            detail: detail.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
