//! Experiment harness: grid search on a training subset, full runs to a pass
//! budget, per-pass metrics, reference optima and memory audits.

mod audit;
mod experiment;
mod io;
mod record;
mod reference;

pub use crate::accounting::{effective_pass_of, Method, PassCounters};
pub use audit::{memory_audit, MemoryAudit};
pub use experiment::{
    grid_search, run_experiment, run_method, ExperimentOutcome, ExperimentPlan, ExperimentSummary, GridCandidate,
    GridResult, Hyper, MethodSummary, RepeatSummary,
};
pub use io::{write_atomically, write_json};
pub use record::{mean_table, read_csv, records_from_result, write_csv, RunRecord, CSV_HEADER};
pub use reference::{reference_solution, ReferenceConfig, ReferenceSolution};

use std::path::PathBuf;

use thiserror::Error;

use crate::data::DataError;
use crate::model::ModelError;
use crate::solvers::SolverError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("no grid candidate for {0} produced a finite objective")]
    GridFailed(Method),
}
