use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum NedError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("gold set is empty")]
    EmptyGold,

    #[error("gold target `{0}` not found in target knowledge base")]
    MissingGoldTarget(String),

    #[error("unknown entity `{0}`")]
    UnknownEntity(String),

    #[error("dimension mismatch at row {row}: expected {expected}, found {found}")]
    DimMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in vector `{id}` at row {row}")]
    NonFinite { id: String, row: usize },

    #[error("candidate pool is empty")]
    EmptyPool,

    #[error("invalid span: {0}")]
    InvalidSpan(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("pair sequence has no [ENT_DESC] marker")]
    MissingDescMarker,

    #[error("no score for mention `{mention}` and entity `{entity}`")]
    MissingScore { mention: String, entity: String },

    #[error("reference mismatch: {0}")]
    RefMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing input artifact `{artifact}` ({path})")]
    MissingInput { artifact: String, path: PathBuf },
}

impl NedError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NedError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl ToString, line: usize, message: impl ToString) -> Self {
        NedError::Parse {
            path: path.to_string(),
            line,
            message: message.to_string(),
        }
    }

    /// Process exit code used by the command-line front end.
    ///
    /// 2 = configuration error, 3 = missing input, 4 = data validation
    /// error, 1 = anything else (I/O failures).
    pub fn exit_code(&self) -> u8 {
        match self {
            NedError::Config(_) | NedError::Argument(_) => 2,
            NedError::MissingInput { .. } => 3,
            NedError::Io { .. } => 1,
            _ => 4,
        }
    }
}

pub type Result<T, E = NedError> = std::result::Result<T, E>;
