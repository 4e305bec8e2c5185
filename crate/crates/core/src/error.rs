use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("ingestion error at line {line}: {message}")]
    Ingestion { line: usize, message: String },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("format error: {0}")]
    Format(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("pairing error: {0}")]
    Pairing(String),
    #[error("training error: {0}")]
    Training(String),
    #[error("lookup error: {0}")]
    Lookup(String),
    #[error("metric undefined: {0}")]
    Metric(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err(what: &str, a: (usize, usize), b: (usize, usize)) -> Error {
    Error::Dimension(format!("{what}: {}x{} vs {}x{}", a.0, a.1, b.0, b.1))
}
