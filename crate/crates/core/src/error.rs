use thiserror::Error;

/// Errors produced by the estimation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The data cannot support the requested estimate (zero spread,
    /// all samples degenerate, nothing left after removal, ...).
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    /// A solver exhausted its pivot or iteration budget.
    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),
    /// The exact enumeration guard rejected the instance.
    #[error("enumeration limit exceeded: {required:.3e} candidates > limit {limit:.3e}")]
    LimitExceeded { required: f64, limit: f64 },
    /// Malformed input file.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn degenerate(msg: impl Into<String>) -> Error {
    Error::DegenerateData(msg.into())
}
