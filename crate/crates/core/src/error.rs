use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the function's domain.
    #[error("domain error in {func}: {reason}")]
    Domain { func: &'static str, reason: String },

    /// An iterative method or quadrature did not reach the requested tolerance.
    #[error("accuracy error in {func}: {reason}")]
    Accuracy { func: &'static str, reason: String },

    /// The requested integral does not converge.
    #[error("divergent integral in {func}: {reason}")]
    Divergent { func: &'static str, reason: String },

    /// Writing a table failed.
    #[error("output error: {0}")]
    Output(String),
}

impl Error {
    pub(crate) fn domain(func: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            func,
            reason: reason.into(),
        }
    }

    pub(crate) fn accuracy(func: &'static str, reason: impl Into<String>) -> Self {
        Error::Accuracy {
            func,
            reason: reason.into(),
        }
    }

    pub(crate) fn divergent(func: &'static str, reason: impl Into<String>) -> Self {
        Error::Divergent {
            func,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
