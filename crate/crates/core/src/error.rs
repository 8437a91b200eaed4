use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {reason}")]
    UnreadableFile { path: PathBuf, reason: String },
    #[error("unsupported raster format in {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },
    #[error("image has a zero or too small dimension ({width}x{height})")]
    ZeroDimension { width: usize, height: usize },
    #[error("cannot write {path}: {reason}")]
    WriteFailure { path: PathBuf, reason: String },
    #[error("mask has no foreground pixels")]
    EmptyMask,
    #[error("kernel {kernel_w}x{kernel_h} does not fit into image {width}x{height}")]
    KernelLargerThanImage {
        kernel_w: usize,
        kernel_h: usize,
        width: usize,
        height: usize,
    },
    #[error("image {width}x{height} is smaller than the required {min}x{min}")]
    ImageTooSmall { width: usize, height: usize, min: usize },
    #[error("pixel ({row}, {col}) is outside a {width}x{height} image")]
    OutOfBounds {
        row: usize,
        col: usize,
        width: usize,
        height: usize,
    },
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("corrupt cache: {0}")]
    CorruptCache(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("feature vector has length {found}, expected {expected}")]
    BadVectorLength { expected: usize, found: usize },
    #[error("evaluation set is empty")]
    EmptyEvalSet,
    #[error("corrupt model: {0}")]
    CorruptModel(String),
    #[error("no seed points found")]
    NoSeedsFound,
    #[error("nothing to evaluate")]
    EmptyEvaluation,
    #[error("ROC needs both classes: {positives} positives, {negatives} negatives")]
    DegenerateClasses { positives: usize, negatives: usize },
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("image {id}: {source}")]
    InImage {
        id: String,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse classification of an [`Error`], used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Io,
    Internal,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::UnreadableFile { .. }
            | Error::UnsupportedFormat { .. }
            | Error::WriteFailure { .. }
            | Error::CorruptCache(_)
            | Error::CorruptModel(_) => ErrorClass::Io,
            Error::Invariant(_) => ErrorClass::Internal,
            Error::InImage { source, .. } => source.class(),
            _ => ErrorClass::Validation,
        }
    }

    /// Wraps the error with the id of the image being processed.
    pub fn in_image(self, id: impl Into<String>) -> Self {
        Error::InImage {
            id: id.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn write(path: impl Into<PathBuf>, err: impl ToString) -> Self {
        Error::WriteFailure {
            path: path.into(),
            reason: err.to_string(),
        }
    }

    pub(crate) fn read(path: impl Into<PathBuf>, err: impl ToString) -> Self {
        Error::UnreadableFile {
            path: path.into(),
            reason: err.to_string(),
        }
    }
}
