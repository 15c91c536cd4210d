use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("undeclared symbol `{0}`")]
    UndeclaredSymbol(String),

    #[error("symbol `{0}` declared twice")]
    DuplicateSymbol(String),

    #[error("symbol `{name}` expects {expected} argument(s), got {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("malformed formula: {0}")]
    Formula(String),

    #[error("line {line}: {message}")]
    Structure { line: usize, message: String },

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("{0}")]
    Io(String),
}

impl Error {
    pub(crate) fn structure(line: usize, message: impl Into<String>) -> Self {
        Error::Structure {
            line,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
