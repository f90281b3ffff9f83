use std::path::PathBuf;

use sentgraph_core::ErrorKind;
use sentgraph_eval::EvalError;
use sentgraph_model::ModelError;
use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("cannot access {}: {source}", path.display())]
    File { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] sentgraph_core::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            CliError::Config(_) | CliError::File { .. } => ErrorKind::Input,
            CliError::Core(e) => e.kind(),
            CliError::Model(e) => e.kind(),
            CliError::Eval(e) => e.kind(),
        }
    }

    /// Machine-readable code: the grammar rule for parse and prefix
    /// failures, otherwise the error class.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(sentgraph_core::Error::Parse { violation, .. })
            | CliError::Model(ModelError::Core(sentgraph_core::Error::Parse { violation, .. })) => violation.code(),
            CliError::Model(ModelError::Prefix { code, .. }) => code,
            _ => match self.kind() {
                ErrorKind::Input => "E_INPUT",
                ErrorKind::Contract => "E_CONTRACT",
                ErrorKind::Capacity => "E_CAPACITY",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::Input => 2,
            ErrorKind::Contract => 3,
            ErrorKind::Capacity => 4,
        }
    }
}
