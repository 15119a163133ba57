use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed wav header: {0}")]
    MalformedHeader(String),

    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("empty audio payload")]
    EmptyPayload,

    #[error("unsupported sample rate {0} Hz (expected {1})")]
    UnsupportedRate(u32, &'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("input too short: {0}")]
    TooShort(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-finite value in input data")]
    NonFinite,

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("bad model file: {0}")]
    BadModel(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("missing file {0}")]
    MissingFile(PathBuf),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
