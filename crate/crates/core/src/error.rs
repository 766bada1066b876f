use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid static parameters: {0}")]
    InvalidParams(String),
    #[error("invalid level: {0}")]
    InvalidLevel(String),
    #[error("step called on a terminal state")]
    TerminalStep,
    #[error("teacher design is incomplete")]
    IncompleteDesign,
    #[error("invalid action {action} (action space has {n} actions)")]
    InvalidAction { action: usize, n: usize },
    #[error("shape mismatch: expected {expected} lanes, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("wrapper state missing from extras: {0}")]
    MissingExtra(&'static str),
}
