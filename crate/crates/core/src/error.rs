use thiserror::Error;

pub type Result<T> = std::result::Result<T, QwError>;

/// Failure modes shared by every module of the engine.
#[derive(Debug, Error)]
pub enum QwError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("eigensolver failed at k = {k:?}")]
    NumericalFailure { k: Vec<f64> },

    #[error("group velocity undefined at singular point k = {k:?}")]
    SingularPoint { k: Vec<f64> },

    #[error("k = {k:?} lies within {distance:e} of a degeneracy of branch {branch}; use the diabolical-point analysis instead")]
    RegularityViolation { k: Vec<f64>, branch: usize, distance: f64 },

    #[error("branch {branch} is degenerate at k = {k:?}; supply an explicit coin vector")]
    AmbiguousBranch { k: Vec<f64>, branch: usize },

    #[error("probability field has zero total weight")]
    DegenerateField,

    #[error("packet projects only {projection:.6} onto the selected branches (need >= 0.99)")]
    IllPosedComparison { projection: f64 },

    #[error("quadrature did not converge: {0}")]
    Resolution(String),

    #[error("feature extraction failed: {0}")]
    FeatureExtraction(String),

    #[error("unknown coin id {id:?}; available: {available}")]
    UnknownCoin { id: String, available: String },

    #[error("unknown backend {id:?}; available: {available}")]
    UnknownBackend { id: String, available: String },

    #[error("malformed {format} data: {message}")]
    Format { format: &'static str, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl QwError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        QwError::InvalidArgument(msg.into())
    }

    pub(crate) fn format(format: &'static str, message: impl Into<String>) -> Self {
        QwError::Format {
            format,
            message: message.into(),
        }
    }
}
