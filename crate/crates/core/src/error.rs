//! Error type shared by all faintmark operations.

use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("failed to decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("{path}: only 8-bit PNG images are supported")]
    UnsupportedBitDepth { path: PathBuf },

    #[error("{path}: payload masks must be 8-bit grayscale PNGs")]
    NotGrayscale { path: PathBuf },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: String, right: String },

    #[error("operation requires a non-empty payload mask")]
    EmptyMask,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("payload bbox at ({x}, {y}) does not fit inside a {width}x{height} image")]
    OutOfBounds {
        x: u32,
        y: u32,
        width: u32,
        height: u32,
    },

    #[error("placement window entropy {entropy:.3} bits exceeds the feasibility threshold")]
    InfeasiblePlacement { entropy: f64 },

    #[error("prompt must be non-empty")]
    EmptyPrompt,

    #[error("corpus must be non-empty")]
    EmptyCorpus,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(lw: u32, lh: u32, rw: u32, rh: u32) -> Self {
        Error::DimensionMismatch {
            left: format!("{lw}x{lh}"),
            right: format!("{rw}x{rh}"),
        }
    }
}
