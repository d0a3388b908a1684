use std::path::PathBuf;

use thiserror::Error;

use crate::trainer::EpochReport;

pub type Result<T, E = LdtsError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LdtsError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("argument error: {0}")]
    Argument(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error in {}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    /// Training produced a non-finite loss. `last_report` is the last epoch
    /// that completed cleanly, if any.
    #[error("training diverged at epoch {epoch}")]
    Diverged {
        epoch: usize,
        last_report: Option<Box<EpochReport>>,
    },
}

impl LdtsError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LdtsError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        LdtsError::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
