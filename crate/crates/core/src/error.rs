use alloc::string::String;

/// Errors raised by the design engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state space has {states} states, above the enumeration cap of {cap}")]
    StateSpaceTooLarge { states: usize, cap: usize },

    #[error("model `{0}` is not supported by the exact transition oracle")]
    OracleUnsupported(&'static str),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("singular regression design matrix")]
    SingularRegression,

    #[error("every utility evaluation for model {0} was screened out")]
    AllScreenedOut(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}
