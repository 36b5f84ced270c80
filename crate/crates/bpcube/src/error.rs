use thiserror::Error;

/// Errors raised by the kernel. Each variant names the contract that failed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("depth mismatch: {0}")]
    Depth(String),
    #[error("classification error: {0}")]
    Class(String),
    #[error("invalid parameters: {0}")]
    Param(String),
    #[error("order error: {0}")]
    Order(String),
    #[error("composition error: {0}")]
    Composition(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("variable error: {0}")]
    Var(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("budget of {0} candidate evaluations exceeded")]
    Budget(u64),
    #[error("invalid presheaf: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
