use serde::Serialize;

use super::BenchError;
use crate::accounting::Method;
use crate::data::{synth_problem, SynthSpec};
use crate::solvers::{
    batch_admm_solve, sa_admm_solve, scas_general_solve, stoc_admm_solve, BatchConfig, MemoryFootprint, ProjectionBall,
    RunOptions, SaConfig, ScasConfig, Schedule, StocConfig,
};

/// Most persistent `p`-vectors SCAS may hold.
const SCAS_LIMIT: usize = 8;
/// Allowed non-table vectors for SA-ADMM on top of its `n` stored gradients.
const SA_EXTRA_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryAudit {
    pub method: Method,
    pub n: usize,
    pub p: usize,
    /// Rows of `A` (and columns of `B`).
    pub l: usize,
    pub footprint: MemoryFootprint,
    /// Whether the count respects the method's bound: at most 8 for SCAS,
    /// `n + k` with `k ≤ 8` for SA-ADMM, at most 8 for the others.
    pub within_bound: bool,
}

/// Runs `method` briefly on a synthetic `n × p` problem with `edges` graph
/// edges and reports its persistent `p`-vector count.
pub fn memory_audit(method: Method, n: usize, p: usize, edges: usize) -> Result<MemoryAudit, BenchError> {
    let spec = SynthSpec::new(p, n, edges, 1);
    let (prob, _) = synth_problem(&spec)?;
    let one = RunOptions::iterations(1);
    let result = match method {
        Method::Scas => {
            let cfg = ScasConfig::new(Schedule::fixed(1e-3, Some(n)), one);
            scas_general_solve(&prob, &cfg, ProjectionBall::centered(p, 1e6)?, 0)?
        }
        Method::Sa => sa_admm_solve(&prob, &SaConfig::new(1e-3, one), 0)?,
        Method::Stoc => stoc_admm_solve(&prob, &StocConfig::new(1e-3, one), 0)?,
        Method::Batch => {
            let mut cfg = BatchConfig::new(one);
            cfg.inner_max_iters = 1;
            batch_admm_solve(&prob, &cfg)?
        }
    };
    let fp = result.memory;
    let within_bound = match method {
        Method::Sa => fp.stored_gradients == n && fp.persistent_vectors <= n + SA_EXTRA_LIMIT,
        _ => fp.stored_gradients == 0 && fp.persistent_vectors <= SCAS_LIMIT,
    };
    Ok(MemoryAudit {
        method,
        n,
        p,
        l: prob.dim_constraint(),
        footprint: fp,
        within_bound,
    })
}
