use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Syntax {
        offset: usize,
        line: Option<usize>,
        message: String,
    },

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("determinization exceeded the state budget of {limit}")]
    CapacityExceeded { limit: usize },

    #[error("state {state} out of range for an automaton with {states} states")]
    IndexOutOfRange { state: usize, states: usize },

    #[error("trace consumed {consumed} words but the sentence has {len}")]
    LengthMismatch { consumed: usize, len: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("missing features: {0}")]
    MissingFeatures(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches a file line number to a syntax error.
    pub(crate) fn at_line(self, line_no: usize) -> Self {
        match self {
            Error::Syntax {
                offset, message, ..
            } => Error::Syntax {
                offset,
                line: Some(line_no),
                message,
            },
            other => other,
        }
    }
}
