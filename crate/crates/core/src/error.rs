//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor shapes disagree with an operation's contract.
    #[error("dimension mismatch in {op}: {left} vs {right}")]
    Dimension {
        op: &'static str,
        left: String,
        right: String,
    },

    /// A vector the operation cannot handle: zero norm or constant.
    #[error("degenerate vector in {0}")]
    Degenerate(&'static str),

    /// An operation was called outside its stated contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Bad configuration value or combination.
    #[error("invalid config: {0}")]
    Config(String),

    /// A file exists but does not parse as the expected format.
    #[error("format error in {path}: {msg}")]
    Format { path: String, msg: String },

    /// Inconsistent or missing data.
    #[error("data error: {0}")]
    Data(String),

    /// A named entity (subject, word, parameter block) was not found.
    #[error("lookup failed: {0}")]
    Lookup(String),

    /// Mean-tracker state does not cover a requested layer or word.
    #[error("tracker state: {0}")]
    Tracker(String),

    /// Non-finite value where a finite one is required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Invalid argument value.
    #[error("argument error: {0}")]
    Argument(String),

    /// Stored data fails its own consistency checks.
    #[error("corrupt store: {0}")]
    Corrupt(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI exit code: 1 for validation/data problems the user can fix,
    /// 2 for violated internal invariants.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Format { .. }
            | Error::Data(_)
            | Error::Lookup(_)
            | Error::Argument(_)
            | Error::Degenerate(_)
            | Error::Corrupt(_)
            | Error::Io(_) => 1,
            Error::Dimension { .. }
            | Error::Contract(_)
            | Error::Tracker(_)
            | Error::Numeric(_) => 2,
        }
    }
}
