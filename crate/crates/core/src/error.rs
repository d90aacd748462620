use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong inside the library.
///
/// The CLI sorts these into usage/format problems and data/numerical
/// problems via [`Error::is_input_error`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid covariance spec: {0}")]
    Spec(String),

    #[error("signal variance {signal} is not below total variance {total}")]
    SignalExceedsVariance { signal: f64, total: f64 },

    #[error("covariate {index} has non-positive variance {variance}")]
    DegenerateCovariate { index: usize, variance: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("infeasible collection: {0}")]
    InfeasibleCollection(String),

    #[error("collection would contain {count} models (cap {cap})")]
    TooManyModels { count: u128, cap: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("degenerate residual: response lies numerically in span of the design ({0})")]
    DegenerateResidual(String),

    #[error("floor(alpha * B) = 0 for alpha = {alpha}, B = {draws}; increase the number of draws")]
    DrawsTooSmall { alpha: f64, draws: usize },

    #[error("power guarantee void: n - d = {n_minus_d} must exceed 4 log(2/delta) = {bound}")]
    GuaranteeVoid { n_minus_d: f64, bound: f64 },

    #[error("missing parameter `{0}`")]
    MissingParam(&'static str),

    #[error("malformed sequence: {0}")]
    MalformedSequence(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("replicate {index}: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by malformed input files or parameters, as
    /// opposed to numerical or data-dependent failures.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Parse { .. } | Error::MissingParam(_) | Error::Io(_) => true,
            Error::Replicate { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}
