use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] lcd_spectra::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },
    #[error("incompatible checkpoint: {0}")]
    Compat(String),
    #[error("series {path}: {reason}")]
    Series { path: PathBuf, reason: String },
    #[error("{message}; last checkpoint: {checkpoint}")]
    BlowUp { message: String, checkpoint: String },
    #[error("usage: {0}")]
    Usage(String),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}
