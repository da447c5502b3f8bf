//! Reproduction harness: experiment cells described by flat key-value spec
//! files, parallel empirical trials, one matched prediction run, and CSV
//! emission with mechanical pass/fail comparison.

mod report;
mod run;
mod spec;
mod table;

pub use report::{compare_report, CompareReport, CompareRow, Tolerances};
pub use run::{run_experiment, sweep, ExperimentArtifacts};
pub use spec::{ExperimentSpec, GridSpec, Scenario};
pub use table::{CdfRow, CdfTable, ResultRow, ResultTable, Source, CDF_HEADER, RESULT_HEADER};

use thiserror::Error;

use crate::model::ModelError;
use crate::prediction::PredictionError;
use crate::solver::SolverError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("spec line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown spec key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {msg}")]
    InvalidValue { key: String, msg: String },
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("result table is missing {0} rows")]
    MissingSource(&'static str),
    #[error("CSV line {line}: {msg}")]
    CsvParse { line: usize, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Prediction(#[from] PredictionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
