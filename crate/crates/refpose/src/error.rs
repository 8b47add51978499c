use std::io;
use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: file contains no matches", path.display())]
    EmptyMatches { path: PathBuf },
    #[error("no camera for image {0:?}")]
    MissingCamera(String),
    #[error("image sets differ; only in reference: {only_reference:?}; only in estimates: {only_estimate:?}")]
    NameMismatch { only_reference: Vec<String>, only_estimate: Vec<String> },
    #[error(transparent)]
    Core(#[from] refpose_core::Error),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        Error::Parse { path: path.to_path_buf(), line, message: message.into() }
    }

    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }
}
