use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("polygon needs at least 3 vertices, got {0}")]
    DegeneratePolygon(usize),

    #[error("mask has no foreground pixels")]
    EmptyMask,

    #[error("mask is degenerate for this operation: {0}")]
    DegenerateMask(&'static str),

    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),

    #[error("value outside domain: {0}")]
    Domain(String),

    #[error("no candidate pixels in the dilated band around the mask")]
    NoBand,

    #[error("generation failed after {attempts} attempts ({what}), seed {seed:#018x}")]
    Generation {
        what: &'static str,
        attempts: u32,
        seed: u64,
    },

    #[error("sample {sample_index} (master seed {master_seed}): {source}")]
    Sample {
        master_seed: u64,
        sample_index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("paired differences have zero variance but nonzero mean {0}")]
    DegenerateVariance(f64),

    #[error("invalid {spec}.{field}: {message}")]
    Validation {
        spec: &'static str,
        field: &'static str,
        message: String,
    },

    #[error("config parse error: {0}")]
    ConfigParse(#[from] serde_json::Error),

    #[error("manifest in {dir} was written with config hash {existing}, current config hash is {current}")]
    ConfigMismatch {
        dir: PathBuf,
        existing: String,
        current: String,
    },

    #[error("checksum mismatch for {0}")]
    Checksum(String),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("server error {code:#04x}: {message}")]
    Remote { code: u8, message: String },

    #[error("dimension does not fit the wire format: {0}")]
    Overflow(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(spec: &'static str, field: &'static str, message: impl Into<String>) -> Self {
        Error::Validation {
            spec,
            field,
            message: message.into(),
        }
    }
}
