use thiserror::Error;

use crate::grammar::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used for process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Contract,
    Capacity,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("parse error at token {position}: {violation}")]
    Parse { position: usize, violation: Violation },
    #[error("disjointness violated: edge ({0}, {1}) generated more than once")]
    Disjointness(usize, usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Input(_) | Error::Io(_) => ErrorKind::Input,
            Error::Capacity(_) => ErrorKind::Capacity,
            Error::Contract(_) | Error::Parse { .. } | Error::Disjointness(..) => ErrorKind::Contract,
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
