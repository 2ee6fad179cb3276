use thiserror::Error;

use crate::llm::LlmError;

pub type Result<T, E = ValidationError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("not found: {0}")]
    NotFound(String),

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Llm(#[from] LlmError),

    #[error("store error: {0}")]
    Store(String),

    #[error(transparent)]
    Core(#[from] pqready_core::CoreError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
