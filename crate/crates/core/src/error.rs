use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    /// A hard privacy precondition failed. `min_n` is the smallest sample
    /// size for which it would hold with the other parameters unchanged.
    #[error("privacy precondition violated: {reason} (requires n >= {min_n})")]
    PrivacyPrecondition { reason: String, min_n: usize },

    #[error("epsilon {epsilon} is outside the shuffling regime (maximum admissible {max_epsilon})")]
    PrivacyRegime { epsilon: f64, max_epsilon: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors that stem from a numerical routine rather than from
    /// the caller's configuration.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::NonFinite(_))
    }

    /// True for privacy refusals (preconditions or regime checks).
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::PrivacyPrecondition { .. } | Error::PrivacyRegime { .. }
        )
    }
}
