use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the augmentation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("cannot decode {}: {reason}", path.display())]
    Decode { path: PathBuf, reason: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("region selects no cells")]
    EmptyRegion,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image {image_id}: {source}")]
    Image {
        image_id: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    /// Attaches the image id a failure belongs to.
    pub fn for_image(self, image_id: u64) -> Self {
        Error::Image {
            image_id,
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through [`Error::Image`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Image { source, .. } => source.root(),
            other => other,
        }
    }
}
