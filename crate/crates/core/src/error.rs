use std::fmt;

/// Errors produced by the toolkit's numerical operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Input data violates a structural requirement (non-finite entries,
    /// asymmetry or indefiniteness beyond tolerance, ...).
    InvalidInput(String),
    /// An argument is out of range or inconsistent with the other arguments.
    InvalidArgument(String),
    /// The request exceeds a documented capacity contract.
    Capacity(String),
    /// The input is degenerate for this operation (e.g. a zero matrix has no
    /// stable rank).
    DegenerateInput(String),
    /// Mutable state reached a configuration the operation cannot proceed
    /// from; the caller must reset it.
    DegenerateState(String),
    /// An iterative kernel exhausted its iteration budget without meeting
    /// its tolerance.
    NonConvergence(String),
    /// A requested experiment configuration cannot be realized.
    Config(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(m) => write!(f, "invalid input: {m}"),
            Error::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            Error::Capacity(m) => write!(f, "capacity exceeded: {m}"),
            Error::DegenerateInput(m) => write!(f, "degenerate input: {m}"),
            Error::DegenerateState(m) => write!(f, "degenerate state: {m}"),
            Error::NonConvergence(m) => write!(f, "no convergence: {m}"),
            Error::Config(m) => write!(f, "configuration error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
