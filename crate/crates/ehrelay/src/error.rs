use thiserror::Error;

/// Errors produced by the solvers and checkers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument violates a documented precondition (bad profile, negative
    /// power, malformed policy, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The instance admits no solution: not enough harvested energy, relay
    /// budget too small for the requested data, or a zero-rate relay.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The brute-force oracle refuses instances beyond its intended scale.
    #[error("instance too large: {0}")]
    TooLarge(String),

    /// A solver invariant failed; indicates a bug rather than bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }

    pub(crate) fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}
