use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] cslf_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: cannot decode image: {message}", path.display())]
    Decode { path: PathBuf, message: String },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    /// Process exit code: 1 for problems with the user's inputs, 2 for
    /// failures of the program itself.
    pub fn exit_code(&self) -> i32 {
        use cslf_core::Error as E;
        match self {
            Error::Internal(_) => 2,
            Error::Io { source, .. } if source.kind() != std::io::ErrorKind::NotFound
                && source.kind() != std::io::ErrorKind::PermissionDenied =>
            {
                2
            }
            Error::Core(E::ShapeMismatch { .. } | E::NonScalarLoss(_) | E::DuplicateParameter(_) | E::MissingGradient(_)) => 2,
            _ => 1,
        }
    }
}
