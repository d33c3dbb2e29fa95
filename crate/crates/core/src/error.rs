use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("metadata {path}: {msg}")]
    Metadata { path: PathBuf, msg: String },

    #[error("raw data length mismatch: expected {expected} bytes, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("checksum mismatch: metadata records {expected}, raw data hashes to {found}")]
    ChecksumMismatch { expected: String, found: String },

    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("label code {code} at voxel {index} is outside 0..=8")]
    InvalidLabel { code: u8, index: usize },

    #[error("non-finite or negative intensity {value} at voxel {index}")]
    InvalidIntensity { value: f64, index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("volume has no signal (maximum is zero)")]
    NoSignal,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("phantom geometry: {0}")]
    Geometry(String),

    #[error("training data: {0}")]
    Training(String),

    #[error("non-finite feature value")]
    NonFiniteFeature,

    #[error("model file line {line}: {msg}")]
    ModelParse { line: usize, msg: String },

    #[error("evaluation: {0}")]
    Evaluation(String),

    #[error("csv {path}: {msg}")]
    Csv { path: PathBuf, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
