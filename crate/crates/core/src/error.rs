use thiserror::Error;

/// Errors raised by the counters, quadratures and arithmetic helpers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside the range the routine supports.
    #[error("{what} = {value} is outside the supported envelope ({limit})")]
    Envelope {
        what: &'static str,
        value: String,
        limit: String,
    },
    /// A precondition on the arguments does not hold.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Checked integer arithmetic overflowed.
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
    /// An adaptive quadrature did not reach its tolerance.
    #[error("quadrature failed to converge: {0}")]
    Convergence(String),
    /// A least-squares fit was degenerate.
    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn envelope(what: &'static str, value: impl ToString, limit: impl ToString) -> Self {
        Error::Envelope {
            what,
            value: value.to_string(),
            limit: limit.to_string(),
        }
    }
}
