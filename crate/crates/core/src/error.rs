use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    Param { field: &'static str, reason: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error(
        "non-finite sample at step {step} (row {row}, col {col}, channel {channel}); aborting run"
    )]
    NonFinite {
        step: usize,
        row: usize,
        col: usize,
        channel: usize,
    },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("undefined metric: {0}")]
    Undefined(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("image codec: {0}")]
    Codec(#[from] image::ImageError),

    #[error("{path}: {reason}")]
    Config { path: PathBuf, reason: String },

    #[error("invalid glob pattern: {0}")]
    Pattern(#[from] globset::Error),

    #[error("trees are not aligned; missing: {}", .0.join(", "))]
    Misaligned(Vec<String>),

    #[error("manifest: {0}")]
    Manifest(String),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Param {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
