use std::path::PathBuf;

use thiserror::Error;

/// Which geometric dimension collapsed when a convex hull could not be built.
///
/// Callers that aggregate hulls over many small point sets (slab volumes)
/// map all three onto a zero-volume contribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    /// All points coincide within tolerance.
    Coincident,
    /// All points lie on a common line within tolerance.
    Collinear,
    /// All points lie on a common plane within tolerance.
    Coplanar,
}

impl std::fmt::Display for Degeneracy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Degeneracy::Coincident => write!(f, "coincident"),
            Degeneracy::Collinear => write!(f, "collinear"),
            Degeneracy::Coplanar => write!(f, "coplanar"),
        }
    }
}

/// Error type shared by every module of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("operation requires a non-empty point cloud")]
    EmptyCloud,

    #[error("degenerate point cloud: {0}")]
    DegenerateCloud(String),

    #[error("malformed depth frame: expected {expected} samples for {width}x{height}, got {actual}")]
    MalformedFrame {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parse error in {path:?}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("too few points: need more than {needed}, got {actual}")]
    TooFewPoints { needed: usize, actual: usize },

    #[error("index {index} out of range for cloud of {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("degenerate hull input: points are {0}")]
    Degenerate(Degeneracy),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),

    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),

    #[error("parameter {name} out of range: {message}")]
    ParameterOutOfRange { name: &'static str, message: String },

    #[error("pipeline stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Name of the pipeline stage this error was annotated with, if any.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
