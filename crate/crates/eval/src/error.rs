use thiserror::Error;

use sentgraph_core::ErrorKind;

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] sentgraph_core::Error),
}

impl EvalError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            EvalError::Input(_) => ErrorKind::Input,
            EvalError::Core(e) => e.kind(),
        }
    }
}
