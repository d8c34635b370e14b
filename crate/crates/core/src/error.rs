use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownName { pos: usize, name: String },

    #[error("division by zero at index {index}")]
    DivisionByZero { index: usize },

    #[error("exponent at index {index} is not a usable integer: {detail}")]
    BadExponent { index: usize, detail: String },

    #[error("weight sequence `{which}` vanishes at index {index}")]
    ZeroWeight { which: &'static str, index: usize },

    #[error("triangle has a zero diagonal entry at row {row}")]
    ZeroDiagonal { row: usize },

    #[error("subset enumeration over {requested} columns exceeds the limit of {limit}")]
    TooManyColumns { requested: usize, limit: usize },

    #[error("no Schauder basis is available for ell_infinity(u,v,Delta)")]
    NoBasis,

    #[error("kernel mismatch: {0}")]
    KernelMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("job error: {0}")]
    Job(String),
}
