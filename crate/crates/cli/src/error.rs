use std::path::PathBuf;

use thiserror::Error;

use tradegame_core::br::BrError;
use tradegame_core::swap::SwapError;
use tradegame_core::{DpError, GameError, MetricsError};

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("malformed trace: {0}")]
    Trace(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Swap(#[from] SwapError),
    #[error(transparent)]
    Br(#[from] BrError),
}

impl From<std::io::Error> for ExperimentError {
    fn from(source: std::io::Error) -> Self {
        Self::Io {
            path: PathBuf::new(),
            source,
        }
    }
}

pub(crate) trait IoContext<T> {
    fn at(self, path: &std::path::Path) -> Result<T, ExperimentError>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: &std::path::Path) -> Result<T, ExperimentError> {
        self.map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
