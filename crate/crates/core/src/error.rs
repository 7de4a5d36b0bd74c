use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    Convergence { sweeps: usize, residual: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
