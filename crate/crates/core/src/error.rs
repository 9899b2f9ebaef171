use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("latitude {0} outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("invalid angle: {0}")]
    NonFinite(&'static str),
    #[error("cannot convert the zero vector to spherical coordinates")]
    ZeroVector,
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("equirectangular image must be 2:1, got {width}x{height}")]
    Aspect { width: u32, height: u32 },
    #[error("pixel ({u}, {v}) outside a {width}x{height} grid")]
    PixelOutOfRange { u: f64, v: f64, width: u32, height: u32 },
    #[error("spherical polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("spherical polygon has duplicate consecutive vertices at index {0}")]
    DuplicateVertex(usize),
    #[error("Monte-Carlo estimate needs at least {min} samples, got {got}")]
    TooFewSamples { got: u64, min: u64 },
    #[error("IoU threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("score {0} outside [0, 1]")]
    InvalidScore(f64),
    #[error("rotation undefined: point lies at a pole")]
    AtPole,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown image id {0}")]
    UnknownImage(i64),
    #[error("unknown category id {0}")]
    UnknownCategory(i64),
    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("{record} {id}: {message}")]
    Validation {
        record: &'static str,
        id: i64,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
