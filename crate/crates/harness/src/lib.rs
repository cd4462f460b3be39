//! Evaluation harness for text-to-table generation.
//!
//! Reads JSON-lines datasets, reports descriptive statistics, drives live or
//! replayed generation in free-form and schema-guided modes, and scores the
//! outputs into a deterministic report.

pub mod canonical;
pub mod convert;
pub mod dataset;
pub mod describe;
pub mod run;
pub mod transcript;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("endpoint error: {0}")]
    Endpoint(String),
    #[error("{what}: {source}")]
    Io {
        what: String,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn io(what: &str) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
        move |source| HarnessError::Io {
            what: what.to_string(),
            source,
        }
    }

    /// Process exit status: 1 usage, 2 dataset, 3 endpoint.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::Io { .. } => 1,
            HarnessError::Dataset(_) => 2,
            HarnessError::Endpoint(_) => 3,
        }
    }
}
