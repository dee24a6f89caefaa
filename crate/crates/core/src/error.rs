use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller passed inconsistent or out-of-domain arguments.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An input file or directory is missing or malformed.
    #[error("input error ({}): {message}", path.display())]
    Input { path: PathBuf, message: String },

    /// An operation was invoked before the object was ready for it.
    #[error("invalid state: {0}")]
    State(String),

    /// The black box produced unusable output.
    #[error("model error: {0}")]
    Model(String),

    /// An explanation trial failed; carries the trial index for context.
    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    pub(crate) fn input(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Input {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Strips trial annotations to reach the underlying failure.
    pub fn root(&self) -> &Error {
        match self {
            Error::Trial { source, .. } => source.root(),
            other => other,
        }
    }
}
