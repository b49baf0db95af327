//! Dataset ingestion, train/test splitting, the graph-guided fused lasso
//! constraint and synthetic problems.

mod graph;
mod libsvm;
mod split;
mod synth;

pub use graph::{build_correlation_graph, build_ggfl_constraint, random_edges, Edge};
pub use libsvm::{load_dataset, parse_libsvm, parse_libsvm_str, write_libsvm, Dataset};
pub use split::{split, split_indices, SplitSpec};
pub use synth::{synth_problem, synth_samples, SynthSpec};

use std::path::PathBuf;

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
