use thiserror::Error;

/// Errors produced anywhere in the planning pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Gamma mixture hyperparameters that cannot be used.
    #[error("invalid hyperparameters: {0}")]
    InvalidHyper(String),

    /// A moment that does not exist for the requested parameters.
    #[error("undefined moment: {0}")]
    UndefinedMoment(String),

    /// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
    #[error("quadrature did not converge (estimate {estimate:e}, error estimate {error:e})")]
    QuadratureNotConverged { estimate: f64, error: f64 },

    #[error("source index {index} out of range for {len} sources")]
    IndexOutOfRange { index: usize, len: usize },

    /// A sample-size search that could not bracket a solution.
    #[error("search failed: {0}")]
    Search(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
