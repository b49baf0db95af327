//! ADMM solvers: SCAS for general and strongly convex losses, plus the batch,
//! STOC and SA baselines. All of them share the closed-form `y` update for
//! `g(y) = λ||y||₁` with `B = -I` and the exact multiplier update.

mod batch;
mod prox;
mod sa;
mod scas;
mod schedule;
mod state;
mod stoc;
mod strong;

pub use batch::{batch_admm_solve, BatchConfig};
pub use prox::{beta_update, soft_threshold, y_update, ProjectionBall};
pub use sa::{sa_admm_solve, GradientTable, SaConfig};
pub use scas::{inner_direction, inner_step, scas_general_solve, scas_strong_solve, ScasConfig};
pub use schedule::{schedule_eta_m, Schedule, ScheduleMode};
pub use state::{AdmmState, Budget, Checkpoint, MemoryFootprint, RunOptions, SolveResult, Trace, TraceStep, Workspace};
pub use stoc::{solve_proximal_x, stoc_admm_solve, StocConfig};
pub use strong::{validate_strong_params, ConditionCheck, StrongParams, ValidationReport};

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::model::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("unsupported constraint: {0}")]
    UnsupportedConstraint(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite iterate at iteration {iteration} (||x|| = {norm})")]
    NonFinite { iteration: u64, norm: f64 },
}

pub(crate) type Rng = rand_chacha::ChaCha8Rng;

pub(crate) fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
