use thiserror::Error;

/// Everything that can go wrong while configuring or running a solve.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("{0}")]
    InvalidParameter(String),
    /// Parameters are individually valid but do not fit together
    /// (misaligned horizon, non-nested meshes, ...).
    #[error("configuration error: {0}")]
    Configuration(String),
    /// A user-supplied function produced a non-finite value.
    #[error("data error: {0}")]
    Data(String),
    /// Quadrature, factorization or an iterative solver failed.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Configuration(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Wraps the message with the name of the step that failed.
    pub fn context(self, what: &str) -> Self {
        match self {
            Error::InvalidParameter(m) => Error::InvalidParameter(format!("{what}: {m}")),
            Error::Configuration(m) => Error::Configuration(format!("{what}: {m}")),
            Error::Data(m) => Error::Data(format!("{what}: {m}")),
            Error::Numerical(m) => Error::Numerical(format!("{what}: {m}")),
        }
    }

    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidParameter(_) | Error::Configuration(_))
    }
}
