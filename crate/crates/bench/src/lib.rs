//! Experiment harness: suite specifications, runs over random chains, CSV
//! output, and the disk-access cost model.

pub mod io;
pub mod spec;
pub mod suites;

use thiserror::Error;

pub use io::{io_savings_predicted, IoCostReport};
pub use spec::{Method, Suite, SuiteSpec};
pub use suites::{run_experiment, write_csv, Row};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown suite `{0}`; valid suites: size_sweep, density_sweep, accuracy_sweep, repeat_query, io_count")]
    UnknownSuite(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config line {0} is not a `key=value` pair")]
    ConfigLine(usize),
    #[error("config does not name a suite")]
    MissingSuite,
    #[error("invalid `{key}` value `{value}`: {reason}")]
    Value { key: String, value: String, reason: String },
    #[error("formula `{0}`: {1}")]
    Formula(String, bouquet_core::FormulaError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BenchError {
    pub(crate) fn value(key: &str, value: &str, reason: &str) -> Self {
        BenchError::Value {
            key: key.to_string(),
            value: value.to_string(),
            reason: reason.to_string(),
        }
    }
}
