use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: malformed {format} data: {reason}")]
    Malformed { path: PathBuf, format: &'static str, reason: String },

    #[error("{path}: expected {expected} samples, found {found}")]
    SizeMismatch { path: PathBuf, expected: usize, found: usize },

    #[error("{path}: bad sidecar: {reason}")]
    Sidecar { path: PathBuf, reason: String },

    #[error("invalid {what} `{input}`: {reason}")]
    Spec { what: &'static str, input: String, reason: String },

    #[error("{path}: bad config: {reason}")]
    Config { path: PathBuf, reason: String },

    #[error("{0}")]
    Usage(String),

    #[error("replayed output {path} differs from the recorded one")]
    ReplayMismatch { path: PathBuf },

    #[error(transparent)]
    Core(#[from] vstdecon_core::Error),
}

/// Process exit statuses.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const USAGE: u8 = 2;
    pub const DATA: u8 = 3;
    pub const NUMERICAL: u8 = 4;
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn spec(what: &'static str, input: &str, reason: impl Into<String>) -> Error {
        Error::Spec { what, input: input.to_owned(), reason: reason.into() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Spec { .. } | Error::Config { .. } | Error::Usage(_) => exit::USAGE,
            Error::Core(e) if e.is_numerical() => exit::NUMERICAL,
            Error::Core(vstdecon_core::Error::InvalidParameter { .. }) => exit::USAGE,
            _ => exit::DATA,
        }
    }
}
