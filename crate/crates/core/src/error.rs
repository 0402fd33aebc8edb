use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("interval [{lo}, {hi}] lies outside the domain [{a}, {b}]")]
    OutsideDomain { lo: f64, hi: f64, a: f64, b: f64 },

    #[error("invalid parameter field `{field}`: {reason}")]
    InvalidField { field: String, reason: String },

    #[error("non-finite loss at sample {index}")]
    NonFiniteLoss { index: usize },

    #[error("training diverged at step {step}: loss {loss:e}")]
    Diverged { step: usize, loss: f64 },

    #[error("solution became non-finite at step {step} (t = {time})")]
    NonFiniteState { step: usize, time: f64 },

    #[error("grid of {nx} cells is too small for a scheme needing a halo of {halo}")]
    GridTooSmall { nx: usize, halo: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
