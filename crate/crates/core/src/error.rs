use std::io;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate paper id `{0}`")]
    DuplicateKey(String),

    #[error("unknown {what} `{id}`")]
    Lookup { what: &'static str, id: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("split contains no eligible scholars or pairs")]
    EmptySplit,

    #[error("not enough candidate papers for scholar `{scholar}`: need {needed}, have {available}")]
    InsufficientCandidates {
        scholar: String,
        needed: usize,
        available: usize,
    },

    #[error("vector file does not cover paper `{0}`")]
    Coverage(String),

    #[error("vector file line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("function evaluation produced a non-finite value at coordinate {0}")]
    Evaluation(usize),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn lookup(what: &'static str, id: impl Into<String>) -> Self {
        Error::Lookup {
            what,
            id: id.into(),
        }
    }

    /// Process exit code for this error: 1 usage/config, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Parse { .. }
            | Error::DuplicateKey(_)
            | Error::Lookup { .. }
            | Error::EmptySplit
            | Error::InsufficientCandidates { .. }
            | Error::Coverage(_)
            | Error::Format { .. }
            | Error::Checkpoint(_)
            | Error::UndefinedMetric(_)
            | Error::Io(_) => 2,
            Error::Dimension(_)
            | Error::Divergence { .. }
            | Error::Domain(_)
            | Error::Evaluation(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
