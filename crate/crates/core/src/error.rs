use thiserror::Error;

/// Errors produced by the chain, kernel, oracle and channel routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("site {site} outside 1..={length}")]
    SiteOutOfRange { site: usize, length: usize },

    #[error("eigen-solver failed: {0}")]
    EigenSolver(String),

    #[error("expected {expected} {what}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("term-count budget exceeded: {0}")]
    TermBudget(String),

    #[error("malformed contraction: {0}")]
    MalformedContraction(String),

    #[error("guard exceeded: {0}")]
    Guard(String),

    #[error("optimizer failed: {0}")]
    Optimizer(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Budget and guard violations are "too large to run" rather than "wrong input".
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, Error::TermBudget(_) | Error::Guard(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
