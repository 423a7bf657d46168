use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("{path}:{line}: {message}")]
    ConfigLine {
        path: String,
        line: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("non-finite value in {term}")]
    NonFinite { term: String },

    #[error("singular Dirichlet Fisher information for parameter {0:?}")]
    SingularFisher(Vec<f64>),

    #[error("minibatch {index} aborted: {source}")]
    MinibatchAborted {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::ConfigLine { .. } | Error::InvalidParameter(_) => 2,
            Error::Data(_) | Error::DimensionMismatch(_) | Error::Io { .. } => 3,
            Error::NonFinite { .. } | Error::SingularFisher(_) => 4,
            Error::MinibatchAborted { source, .. } => source.exit_code(),
        }
    }
}
