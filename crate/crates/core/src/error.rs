use thiserror::Error;

use crate::baselines::BaselineError;
use crate::criteria::CriteriaError;
use crate::evaluation::EvaluationError;
use crate::signal::SignalError;
use crate::spea2::EngineError;

/// Crate-level error used by the experiment harness and the explorer.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user input; every offending field or value is listed.
    #[error("invalid input:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(vec![msg.into()])
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// True for errors caused by bad input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::Format { .. })
            || matches!(self, Error::Signal(SignalError::Csv { .. } | SignalError::NoSamples))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
