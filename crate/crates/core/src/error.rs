use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid arguments or inconsistent inputs supplied by the caller.
    #[error("usage error: {0}")]
    Usage(String),
    /// A point or parameter outside the domain where a quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// Malformed grid metric file.
    #[error("ingestion error at line {line}: {msg}")]
    Ingestion { line: usize, msg: String },
    /// Metric samples that cannot be used (singular, non-finite).
    #[error("data error: {0}")]
    Data(String),
    /// A numerical procedure failed to produce a trustworthy value.
    #[error("numerical error: {0}")]
    Numeric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
