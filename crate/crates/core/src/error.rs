use thiserror::Error;

/// Errors raised by the completion pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("value buffer has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),

    #[error("slice index {index} out of range for {count} slices")]
    SliceOutOfRange { index: usize, count: usize },

    #[error("expected {expected} half-spectrum slices, got {got}")]
    WrongSliceCount { expected: usize, got: usize },

    #[error("frequency stack is not conjugate-symmetric: imaginary residual {residual:e} exceeds {tolerance:e}")]
    SymmetryViolation { residual: f64, tolerance: f64 },

    #[error("sampling probability {0} outside (0, 1]")]
    InvalidProbability(f64),

    #[error("observation ({i}, {j}, {t}) out of range")]
    IndexOutOfRange { i: usize, j: usize, t: usize },

    #[error("duplicate observation at ({i}, {j}, {t})")]
    DuplicateIndex { i: usize, j: usize, t: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("SVD failed on slice {slice}: {reason}")]
    SvdFailure { slice: usize, reason: String },

    #[error("index set is empty")]
    EmptySet,

    #[error("too few observations to hold out a validation set ({0} entries)")]
    TooFewEntries(usize),

    #[error("grid point ({scale1}, {scale2}): {source}")]
    GridPoint {
        scale1: f64,
        scale2: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Format(#[from] crate::io::FormatError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
