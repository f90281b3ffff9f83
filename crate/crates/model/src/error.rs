use thiserror::Error;

use sentgraph_core::ErrorKind;

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("token {token} is outside the vocabulary of size {vocab_size}")]
    Token { token: u32, vocab_size: usize },
    #[error("loss became {loss} at step {step}; the learning rate is probably too high")]
    Diverged { step: usize, loss: f64 },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("prefix rejected at token {position}: {code}")]
    Prefix { position: usize, code: &'static str },
    #[error(transparent)]
    Core(#[from] sentgraph_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ModelError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            ModelError::Core(e) => e.kind(),
            ModelError::Prefix { .. } => ErrorKind::Contract,
            _ => ErrorKind::Input,
        }
    }
}
