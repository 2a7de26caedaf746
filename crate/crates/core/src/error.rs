use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("scene sampling failed for seed {seed} after {attempts} attempts: {reason}")]
    Sampling {
        seed: u64,
        attempts: usize,
        reason: String,
    },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("source or receiver at {position:?} m lies inside the absorbing layer or outside the grid")]
    Placement { position: [f64; 2] },

    #[error("simulation became unstable at step {step}")]
    Instability { step: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("reference trace never exceeds {threshold} (peak {peak})")]
    Alignment { threshold: f64, peak: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate normalization statistics: min {min} == max {max}")]
    DegenerateStats { min: f64, max: f64 },

    #[error("ring mask needs at least one edge pixel")]
    DegenerateMask,

    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("manifest validation failed: {0}")]
    Manifest(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// Coarse error class, used by the command-line front end to pick exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Format { .. }
            | Error::Io { .. }
            | Error::Json { .. }
            | Error::Manifest(_)
            | Error::Shape(_) => ErrorKind::Format,
            Error::Geometry(_) | Error::Placement { .. } | Error::Sampling { .. } => {
                ErrorKind::Geometry
            }
            Error::Parameter(_) => ErrorKind::Parameter,
            _ => ErrorKind::Other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Format,
    Geometry,
    /// Rejected configuration or argument value.
    Parameter,
    Other,
}
