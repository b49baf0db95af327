use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::record::{mean_table, records_from_result, RunRecord};
use super::reference::{reference_solution, ReferenceConfig};
use super::BenchError;
use crate::accounting::Method;
use crate::data::{build_correlation_graph, build_ggfl_constraint, split_indices, Dataset, SplitSpec};
use crate::exec::{with_thread_cap, Exec};
use crate::model::{AdmmProblem, LossKind, LossSpec, SampleSet};
use crate::solvers::{
    batch_admm_solve, sa_admm_solve, scas_general_solve, scas_strong_solve, stoc_admm_solve, validate_strong_params,
    BatchConfig, MemoryFootprint, ProjectionBall, RunOptions, SaConfig, ScasConfig, Schedule, SolveResult, SolverError,
    StocConfig, StrongParams, ValidationReport,
};

/// Everything one benchmark invocation needs besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub methods: Vec<Method>,
    pub repeats: usize,
    /// Effective-pass budget of every full run.
    pub passes: f64,
    pub lambda: f64,
    pub loss: LossKind,
    /// L2 strength `μ` added to every `f_i`.
    pub mu: f64,
    /// Run SCAS with the constant-step strongly convex variant.
    pub strong: bool,
    pub eta_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    /// Fixes `η` instead of searching `eta_grid`.
    pub eta: Option<f64>,
    /// Fixes `ρ` instead of searching `rho_grid`.
    pub rho: Option<f64>,
    pub grid_subset_size: usize,
    pub grid_passes_stochastic: f64,
    pub grid_passes_batch: f64,
    pub seed: u64,
    pub train_fraction: f64,
    pub graph_threshold: f64,
    /// SCAS inner-loop length; `None` means `M = n`.
    pub scas_inner_length: Option<usize>,
    pub batch_inner_tol: f64,
    pub batch_inner_max_iters: usize,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    pub compute_reference: bool,
    pub exec: Exec,
    /// Worker-thread cap; `None` uses every core.
    pub threads: Option<usize>,
}

/// `count` points spaced evenly in log scale over `[lo, hi]`.
fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64))
        .collect()
}

impl ExperimentPlan {
    pub fn new(lambda: f64) -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            repeats: 10,
            passes: 20.0,
            lambda,
            loss: LossKind::Logistic,
            mu: 0.0,
            strong: false,
            eta_grid: log_grid(1e-4, 1.0, 7),
            rho_grid: log_grid(1e-3, 10.0, 5),
            eta: None,
            rho: None,
            grid_subset_size: 500,
            grid_passes_stochastic: 5.0,
            grid_passes_batch: 100.0,
            seed: 0,
            train_fraction: 0.5,
            graph_threshold: 0.5,
            scas_inner_length: None,
            batch_inner_tol: 1e-8,
            batch_inner_max_iters: 1000,
            cg_tol: 1e-10,
            cg_max_iters: 500,
            compute_reference: false,
            exec: Exec::Parallel,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidPlan(m));
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        for (name, v) in [
            ("passes", self.passes),
            ("grid_passes_stochastic", self.grid_passes_stochastic),
            ("grid_passes_batch", self.grid_passes_batch),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.lambda >= 0.0) || !(self.mu >= 0.0) {
            return bad("lambda and mu must be non-negative".into());
        }
        if self.strong && !(self.mu > 0.0) {
            return bad("the strongly convex SCAS variant needs mu > 0".into());
        }
        let grids = [("eta_grid", &self.eta_grid), ("rho_grid", &self.rho_grid)];
        for (name, g) in grids {
            if g.is_empty() || g.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return bad(format!("{name} must be a nonempty list of positive values"));
            }
        }
        for (name, v) in [("eta", self.eta), ("rho", self.rho)] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if self.grid_subset_size == 0 {
            return bad("grid_subset_size must be at least 1".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            ));
        }
        if self.scas_inner_length == Some(0) {
            return bad("scas inner length must be at least 1".into());
        }
        Ok(())
    }

    fn loss_spec(&self) -> LossSpec {
        LossSpec {
            kind: self.loss,
            l2_strength: self.mu,
        }
    }

    fn etas(&self, method: Method) -> Vec<Option<f64>> {
        match (method, self.eta) {
            (Method::Batch, _) => vec![None],
            (_, Some(e)) => vec![Some(e)],
            (_, None) => self.eta_grid.iter().copied().map(Some).collect(),
        }
    }

    fn rhos(&self) -> Vec<f64> {
        self.rho.map_or_else(|| self.rho_grid.clone(), |r| vec![r])
    }
}

/// Step size (absent for batch ADMM) and penalty of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub eta: Option<f64>,
    pub rho: f64,
}

/// Runs `method` on `prob` (its `ρ` replaced by `hyper.rho`) for `passes`
/// effective passes. For strongly convex SCAS the parameter report is
/// returned too.
pub fn run_method(
    method: Method,
    prob: &AdmmProblem,
    hyper: Hyper,
    passes: f64,
    seed: u64,
    plan: &ExperimentPlan,
) -> Result<(SolveResult, Option<ValidationReport>), SolverError> {
    let prob = prob.with_rho(hyper.rho)?;
    let options = RunOptions::passes(passes);
    let eta = || {
        hyper
            .eta
            .ok_or_else(|| SolverError::InvalidConfig(format!("{method} needs a step size")))
    };
    let result = match method {
        Method::Batch => {
            let cfg = BatchConfig {
                inner_tol: plan.batch_inner_tol,
                inner_max_iters: plan.batch_inner_max_iters,
                convergence_tol: None,
                options,
            };
            batch_admm_solve(&prob, &cfg)?
        }
        Method::Stoc => {
            let cfg = StocConfig {
                eta0: eta()?,
                cg_tol: plan.cg_tol,
                cg_max_iters: plan.cg_max_iters,
                options,
            };
            stoc_admm_solve(&prob, &cfg, seed)?
        }
        Method::Sa => {
            let cfg = SaConfig {
                eta: eta()?,
                cg_tol: plan.cg_tol,
                cg_max_iters: plan.cg_max_iters,
                options,
            };
            sa_admm_solve(&prob, &cfg, seed)?
        }
        Method::Scas if plan.strong => {
            let m = plan.scas_inner_length.unwrap_or(prob.n_samples());
            let params = StrongParams::for_problem(&prob, eta()?, m)?;
            let report = validate_strong_params(&params);
            let mut result = scas_strong_solve(&prob, &params, None, seed, &options)?;
            for c in report.conditions.iter().filter(|c| !c.passed) {
                result.warnings.push(format!(
                    "step-size condition ({}) not met: slack {:.3e}",
                    c.name, c.slack
                ));
            }
            return Ok((result, Some(report)));
        }
        Method::Scas => {
            let ball = ProjectionBall::from_sgd_estimate(&prob)?;
            let cfg = ScasConfig::new(Schedule::fixed(eta()?, plan.scas_inner_length), options);
            scas_general_solve(&prob, &cfg, ball, seed)?
        }
    };
    Ok((result, None))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCandidate {
    pub hyper: Hyper,
    /// `P(x̄, Ax̄)` on the grid subset after the grid budget.
    pub objective: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub method: Method,
    pub best: Hyper,
    pub best_objective: f64,
    pub candidates: Vec<GridCandidate>,
}

/// Tries every `(η, ρ)` of the plan's grids on `subset` for the grid budget
/// and keeps the lowest finite objective; ties go to the earlier candidate.
/// Strongly convex SCAS skips pairs with `ν_L η > 1`.
pub fn grid_search(
    method: Method,
    subset: &AdmmProblem,
    plan: &ExperimentPlan,
    seed: u64,
) -> Result<GridResult, BenchError> {
    let passes = match method {
        Method::Batch => plan.grid_passes_batch,
        _ => plan.grid_passes_stochastic,
    };
    let mut pairs = Vec::new();
    for rho in plan.rhos() {
        let nu_l = if method == Method::Scas && plan.strong {
            Some(subset.with_rho(rho)?.nu_l()?.0)
        } else {
            None
        };
        for eta in plan.etas(method) {
            if let (Some(nu), Some(e)) = (nu_l, eta) {
                if nu * e > 1.0 {
                    continue;
                }
            }
            pairs.push(Hyper { eta, rho });
        }
    }
    let candidates = plan.exec.map_slice(&pairs, |&hyper| {
        let outcome = run_method(method, subset, hyper, passes, seed, plan)
            .and_then(|(r, _)| Ok(subset.objective_at_ax(Exec::Sequential, &r.x_bar)?));
        match outcome {
            Ok(v) if v.is_finite() => GridCandidate {
                hyper,
                objective: Some(v),
                error: None,
            },
            Ok(v) => GridCandidate {
                hyper,
                objective: None,
                error: Some(format!("objective {v}")),
            },
            Err(e) => GridCandidate {
                hyper,
                objective: None,
                error: Some(e.to_string()),
            },
        }
    });
    let mut best: Option<(Hyper, f64)> = None;
    for c in &candidates {
        if let Some(v) = c.objective {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((c.hyper, v));
            }
        }
    }
    let (best, best_objective) = best.ok_or(BenchError::GridFailed(method))?;
    Ok(GridResult {
        method,
        best,
        best_objective,
        candidates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub hyper: Option<Hyper>,
    pub grid: Vec<GridCandidate>,
    pub effective_passes: f64,
    pub final_objective: Option<f64>,
    /// Sample visits under the method's accounting rule.
    pub samples_visited: u64,
    /// Per-sample gradient evaluations actually performed.
    pub gradient_evaluations: u64,
    pub memory: MemoryFootprint,
    pub validation: Option<ValidationReport>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepeatSummary {
    pub repeat: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_edges: usize,
    /// Training-set rows used for the grid search.
    pub grid_subset: Vec<usize>,
    pub reference_objective: Option<f64>,
    pub reference_converged: Option<bool>,
    pub methods: Vec<MethodSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub dataset: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub plan: ExperimentPlan,
    pub repeats: Vec<RepeatSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    /// Sorted by (method, repeat, passes).
    pub records: Vec<RunRecord>,
    pub mean: Vec<RunRecord>,
    pub summary: ExperimentSummary,
    /// Runs that ended in an error.
    pub aborted: usize,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix(base), |acc, &t| mix(acc ^ mix(t)))
}

const GRID_TAG: u64 = 0x6772_6964;

/// Runs the full protocol: per repeat, split, build the correlation graph on
/// the training half, grid-search each method on a shared training subset,
/// then run it to the pass budget and record metrics at every checkpoint.
/// Solver failures are recorded in the summary and do not stop the others.
pub fn run_experiment(dataset: &Dataset, plan: &ExperimentPlan) -> Result<ExperimentOutcome, BenchError> {
    plan.validate()?;
    let samples = &dataset.samples;
    if samples.len() < 2 {
        return Err(BenchError::InvalidPlan(
            "at least two samples are needed for a train/test split".into(),
        ));
    }
    let per_repeat = with_thread_cap(plan.threads, || {
        plan.exec.map_indices(plan.repeats, |r| run_repeat(samples, plan, r))
    });
    let mut records = Vec::new();
    let mut repeats = Vec::new();
    for outcome in per_repeat {
        let (recs, summary) = outcome?;
        records.extend(recs);
        repeats.push(summary);
    }
    records.sort_by(|a, b| {
        (a.method, a.repeat, a.effective_passes)
            .partial_cmp(&(b.method, b.repeat, b.effective_passes))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let aborted = repeats
        .iter()
        .flat_map(|r| &r.methods)
        .filter(|m| m.error.is_some())
        .count();
    Ok(ExperimentOutcome {
        mean: mean_table(&records),
        records,
        summary: ExperimentSummary {
            dataset: dataset.name.clone(),
            n_samples: samples.len(),
            n_features: samples.n_features(),
            plan: plan.clone(),
            repeats,
        },
        aborted,
    })
}

fn run_repeat(
    samples: &SampleSet,
    plan: &ExperimentPlan,
    repeat: usize,
) -> Result<(Vec<RunRecord>, RepeatSummary), BenchError> {
    let spec = SplitSpec {
        train_fraction: plan.train_fraction,
        seed: plan.seed,
        repeat_index: repeat as u64,
    };
    let (train_idx, test_idx) = split_indices(samples.len(), &spec)?;
    let train = Arc::new(samples.subset(&train_idx));
    let test = Arc::new(samples.subset(&test_idx));
    let edges = build_correlation_graph(&train, plan.graph_threshold, plan.exec);
    let constraint = build_ggfl_constraint(samples.n_features(), &edges)?;
    let train_prob = AdmmProblem::new(
        train.clone(),
        plan.loss_spec(),
        plan.lambda,
        Arc::new(constraint),
        plan.rho.unwrap_or(1.0),
    )?;
    let test_prob = train_prob.with_samples(test)?;

    let mut grid_rng = ChaCha8Rng::seed_from_u64(derive_seed(plan.seed, &[repeat as u64, GRID_TAG]));
    let mut grid_subset: Vec<usize> = (0..train.len()).collect();
    grid_subset.shuffle(&mut grid_rng);
    grid_subset.truncate(plan.grid_subset_size.min(train.len()));
    let subset_prob = train_prob.with_samples(Arc::new(train.subset(&grid_subset)))?;

    let runs = plan.exec.map_slice(&plan.methods, |&method| {
        let seed = derive_seed(plan.seed, &[repeat as u64, method as u64]);
        run_one(method, &train_prob, &test_prob, &subset_prob, plan, repeat, seed)
    });
    let mut records = Vec::new();
    let mut methods = Vec::new();
    for run in runs {
        let (recs, summary) = run?;
        records.extend(recs);
        methods.push(summary);
    }

    let (reference_objective, reference_converged) = if plan.compute_reference {
        match reference_solution(&train_prob, &ReferenceConfig::default(), None) {
            Ok(r) => (Some(r.objective), Some(r.converged)),
            Err(e) => {
                log::warn!("repeat {repeat}: reference solve failed: {e}");
                (None, Some(false))
            }
        }
    } else {
        (None, None)
    };
    log::info!("repeat {repeat} finished ({} edges)", edges.len());
    Ok((
        records,
        RepeatSummary {
            repeat,
            n_train: train_idx.len(),
            n_test: test_idx.len(),
            n_edges: edges.len(),
            grid_subset,
            reference_objective,
            reference_converged,
            methods,
        },
    ))
}

fn run_one(
    method: Method,
    train: &AdmmProblem,
    test: &AdmmProblem,
    subset: &AdmmProblem,
    plan: &ExperimentPlan,
    repeat: usize,
    seed: u64,
) -> Result<(Vec<RunRecord>, MethodSummary), BenchError> {
    let mut summary = MethodSummary {
        method,
        hyper: None,
        grid: Vec::new(),
        effective_passes: 0.0,
        final_objective: None,
        samples_visited: 0,
        gradient_evaluations: 0,
        memory: MemoryFootprint::default(),
        validation: None,
        warnings: Vec::new(),
        error: None,
    };
    let grid = match grid_search(method, subset, plan, seed) {
        Ok(g) => g,
        Err(BenchError::GridFailed(m)) => {
            summary.error = Some(BenchError::GridFailed(m).to_string());
            log::warn!("repeat {repeat}, {method}: grid search failed");
            return Ok((Vec::new(), summary));
        }
        Err(e) => return Err(e),
    };
    summary.hyper = Some(grid.best);
    summary.grid = grid.candidates;
    match run_method(method, train, grid.best, plan.passes, seed, plan) {
        Ok((result, validation)) => {
            let records = records_from_result(&result, repeat, train, test, plan.exec)?;
            summary.effective_passes = result.effective_passes();
            summary.final_objective = records.last().map(|r| r.objective);
            summary.samples_visited = result.state.samples_visited;
            summary.gradient_evaluations = result.state.gradient_evaluations;
            summary.memory = result.memory;
            summary.validation = validation;
            summary.warnings = result.warnings;
            log::info!(
                "repeat {repeat}, {method}: {:.1} passes, objective {:.6e}",
                summary.effective_passes,
                summary.final_objective.unwrap_or(f64::NAN)
            );
            Ok((records, summary))
        }
        Err(e) => {
            log::warn!("repeat {repeat}, {method}: solver aborted: {e}");
            summary.error = Some(e.to_string());
            Ok((Vec::new(), summary))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids() {
        let plan = ExperimentPlan::new(1e-5);
        assert_eq!(plan.eta_grid.len(), 7);
        assert!((plan.eta_grid[0] - 1e-4).abs() < 1e-18 && (plan.eta_grid[6] - 1.0).abs() < 1e-15);
        let expected = [1e-3, 1e-2, 1e-1, 1.0, 10.0];
        for (g, e) in plan.rho_grid.iter().zip(expected) {
            assert!((g / e - 1.0).abs() < 1e-12);
        }
        assert!(plan.validate().is_ok());
    }

    #[test]
    fn invalid_plans() {
        let mut p = ExperimentPlan::new(1e-5);
        p.methods.clear();
        assert!(p.validate().is_err());
        let mut p = ExperimentPlan::new(1e-5);
        p.strong = true;
        assert!(p.validate().is_err());
        let mut p = ExperimentPlan::new(1e-5);
        p.eta_grid = vec![];
        assert!(p.validate().is_err());
        let mut p = ExperimentPlan::new(-1.0);
        p.repeats = 1;
        assert!(p.validate().is_err());
    }

    #[test]
    fn seeds_differ_by_tag() {
        let a = derive_seed(1, &[0, 3]);
        assert_eq!(a, derive_seed(1, &[0, 3]));
        assert_ne!(a, derive_seed(1, &[0, 2]));
        assert_ne!(a, derive_seed(2, &[0, 3]));
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
    }
}
