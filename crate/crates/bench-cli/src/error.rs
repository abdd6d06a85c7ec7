use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("reference solver failed: {0}")]
    OracleFailed(String),

    #[error("unsupported problem: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Core(#[from] hypersphere::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed report: {0}")]
    Parse(String),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
