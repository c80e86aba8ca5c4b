use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, OecsError>;

#[derive(Debug, Error)]
pub enum OecsError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("data: {0}")]
    Data(String),
    #[error("latitude {latitude}° lies inside the ±{cutoff}° equatorial band")]
    EquatorBand { latitude: f64, cutoff: f64 },
    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: oecs_core::Error,
    },
    #[error("serialization: {0}")]
    Serialize(String),
}

impl OecsError {
    /// Process exit status: 2 for configuration errors, 3 for data errors and
    /// 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            OecsError::Config(_) => 2,
            OecsError::Io { .. } | OecsError::Parse { .. } | OecsError::Data(_) | OecsError::EquatorBand { .. } => 3,
            OecsError::Numerical { .. } | OecsError::Serialize(_) => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        OecsError::Io { path: path.into(), source }
    }

    pub fn numerical(context: impl Into<String>, source: oecs_core::Error) -> Self {
        OecsError::Numerical { context: context.into(), source }
    }
}

impl From<csv::Error> for OecsError {
    fn from(e: csv::Error) -> Self {
        OecsError::Serialize(e.to_string())
    }
}

impl From<serde_json::Error> for OecsError {
    fn from(e: serde_json::Error) -> Self {
        OecsError::Serialize(e.to_string())
    }
}
