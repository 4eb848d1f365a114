use std::io;

use thiserror::Error;

/// Errors raised across the dialogue-policy toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("venue database must contain at least one venue")]
    EmptyDatabase,

    #[error("invalid evidence for slot {slot}: confidences sum to {sum}")]
    InvalidEvidence { slot: String, sum: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported schema version {found:?} (expected {expected:?})")]
    UnknownVersion { found: String, expected: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("metric is undefined on empty input")]
    UndefinedMetric,

    #[error("dialogue is closed")]
    Closed,

    #[error("invalid data: {0}")]
    Data(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl ToString) -> Self {
        Error::Parse {
            line,
            message: message.to_string(),
        }
    }

    /// True for errors caused by malformed or inconsistent input data.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::EmptyDatabase
                | Error::InvalidEvidence { .. }
                | Error::Parse { .. }
                | Error::UnknownVersion { .. }
                | Error::EmptyCorpus
                | Error::Data(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
