use thiserror::Error;

/// Errors raised by the transforms, feature maps, classifiers and metrics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("part {index} is not strictly positive ({value})")]
    NonPositivePart { index: usize, value: f64 },

    #[error("need at least 2 parts, got {len}")]
    TooShort { len: usize },

    #[error("parts sum to {sum}, expected 1")]
    NotClosed { sum: f64 },

    #[error("log-ratio vector sums to {sum}, expected 0")]
    NotZeroSum { sum: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rank deficient: singular value {value:e} below {threshold:e}")]
    RankDeficient { value: f64, threshold: f64 },

    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    #[error("neighborhood of {n_neighbors} too large for {n_samples} samples")]
    NeighborhoodTooLarge { n_neighbors: usize, n_samples: usize },

    #[error("eigensolver failed: {0}")]
    EigenFailure(String),

    #[error("need at least two classes, found {n_classes}")]
    DegenerateLabels { n_classes: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("label {label} is not among the predicted classes")]
    UnknownLabel { label: usize },

    #[error("top-n requires 1 <= n <= {n_classes}, got {n}")]
    BadN { n: usize, n_classes: usize },

    #[error("covariance of class {class} is not symmetric positive semidefinite")]
    BadCovariance { class: usize },

    #[error("need more than {needed} samples, got {n_samples}")]
    TooFewSamples { n_samples: usize, needed: usize },

    #[error("empty input")]
    Empty,

    #[error("invalid specification: {0}")]
    InvalidSpec(String),
}

impl Error {
    /// Variant name, for reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonPositivePart { .. } => "NonPositivePart",
            Error::TooShort { .. } => "TooShort",
            Error::NotClosed { .. } => "NotClosed",
            Error::NotZeroSum { .. } => "NotZeroSum",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::NeighborhoodTooLarge { .. } => "NeighborhoodTooLarge",
            Error::EigenFailure(_) => "EigenFailure",
            Error::DegenerateLabels { .. } => "DegenerateLabels",
            Error::NonFinite { .. } => "NonFinite",
            Error::UnknownLabel { .. } => "UnknownLabel",
            Error::BadN { .. } => "BadN",
            Error::BadCovariance { .. } => "BadCovariance",
            Error::TooFewSamples { .. } => "TooFewSamples",
            Error::Empty => "Empty",
            Error::InvalidSpec(_) => "InvalidSpec",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
