use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    /// Invalid configuration; `key` names the offending setting.
    #[error("invalid `{key}`: {message}")]
    Usage { key: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] bcddr::Error),
    #[error("nothing to plot: {0}")]
    EmptyCurve(String),
}

impl BenchError {
    pub fn usage(key: &str, message: String) -> Self {
        BenchError::Usage {
            key: key.to_string(),
            message,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
