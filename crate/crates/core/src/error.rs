use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("empty point set")]
    Empty,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("moment order must be nonnegative, got {0}")]
    NegativeOrder(f64),
    #[error("malformed PGM: {0}")]
    MalformedPgm(String),
    #[error("malformed point CSV: {0}")]
    MalformedCsv(String),
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("generalized Fourier transform is singular at the origin")]
    SingularAtZero,
    #[error("unsupported dimension {0}")]
    UnsupportedDim(usize),
    #[error("measures have different representations; convert the target first")]
    MixedRepresentation,
    #[error("bandwidth must be positive, got {0}")]
    NonpositiveBandwidth(f64),
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}
