use thiserror::Error;

use crate::calibration::{CalibrationError, FeedbackError};
use crate::campaign::config_file::ParseError;
use crate::metrics::MetricsError;
use crate::model::{ConfigError, SignalError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Crate-level error, one variant per failing subsystem.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Signal(#[from] SignalError),

    #[error(transparent)]
    Calibration(#[from] CalibrationError),

    #[error(transparent)]
    Feedback(#[from] FeedbackError),

    #[error(transparent)]
    Metrics(#[from] MetricsError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by the configuration rather than the run.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parse(_))
    }
}
