//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("unknown symbol `{name}` at {line}:{col}")]
    UnknownSymbol {
        name: String,
        line: usize,
        col: usize,
    },

    #[error("arity mismatch at {line}:{col}: `{name}` takes {expected} arguments, got {got}")]
    ArityMismatch {
        name: String,
        expected: usize,
        got: usize,
        line: usize,
        col: usize,
    },

    #[error("duplicate name `{name}`")]
    DuplicateName { name: String },

    #[error("the empty clause is not a basic Horn formula")]
    EmptyClause,

    #[error("unknown name `{name}`")]
    UnknownName { name: String },

    #[error("unbound variable `{var}`")]
    UnboundVariable { var: String },

    #[error("signature mismatch: {context}")]
    SignatureMismatch { context: String },

    #[error("structure is not over an expanded signature")]
    NotExpanded,

    #[error("value {value} out of range for universe of size {universe}")]
    OutOfRange { value: usize, universe: usize },

    #[error("empty seed over a constant-free signature generates no substructure")]
    EmptySeed,

    #[error("FIP violation: {0}")]
    FipViolation(String),

    #[error("filter index size mismatch: filter over {filter} indices, {factors} factors")]
    IndexMismatch { filter: usize, factors: usize },

    #[error("resource cap exceeded: {what} needs {needed}, cap is {cap}")]
    Resource {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    #[error("{0}")]
    Usage(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// CLI exit code class: 3 for resource caps, 2 for everything else
    /// (usage and input errors).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource { .. } => 3,
            _ => 2,
        }
    }
}
