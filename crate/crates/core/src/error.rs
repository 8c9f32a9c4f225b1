use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed files, bad values, I/O.
    Data,
    /// Geometry that cannot be matched: dimension mismatches, missing boundary.
    Geometry,
    /// Caller supplied an invalid specification or parameter.
    Usage,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error at byte offset {offset}: {source}")]
    Io {
        offset: u64,
        #[source]
        source: io::Error,
    },

    #[error("truncated payload: expected {expected} bytes, got {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("bad magic {found:?}, expected \"FMAP\"")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported FMAP version {0}")]
    UnsupportedVersion(u32),

    #[error("non-finite value at element {index}")]
    NonFinite { index: usize },

    #[error("image codec error: {0}")]
    Codec(String),

    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("hole does not fit inside the image: {0}")]
    Bounds(String),

    #[error("image too small: {0}")]
    Size(String),

    #[error("mask has no known pixels to draw from")]
    NoBoundary,

    #[error("no candidate patches fit entirely outside the hole (patch size {patch_size}, map {height}x{width})")]
    NoCandidates {
        patch_size: usize,
        height: usize,
        width: usize,
    },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            detail: detail.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. }
            | Error::Truncated { .. }
            | Error::BadMagic { .. }
            | Error::UnsupportedVersion(_)
            | Error::NonFinite { .. }
            | Error::Codec(_) => ErrorClass::Data,
            Error::Invalid { .. } => ErrorClass::Usage,
            Error::Dimension(_)
            | Error::Shape(_)
            | Error::Bounds(_)
            | Error::Size(_)
            | Error::NoBoundary
            | Error::NoCandidates { .. } => ErrorClass::Geometry,
        }
    }
}

impl From<image::ImageError> for Error {
    fn from(err: image::ImageError) -> Self {
        match err {
            image::ImageError::IoError(source) => Error::Io { offset: 0, source },
            other => Error::Codec(other.to_string()),
        }
    }
}
