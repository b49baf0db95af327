use std::time::Instant;

use super::SolverError;
use crate::accounting::{effective_pass_of, Method, PassCounters};
use crate::linalg::vector::{all_finite, norm};
use crate::model::AdmmProblem;

/// Counts every persistent `p`-length vector a solver allocates.
#[derive(Debug)]
pub struct Workspace {
    p: usize,
    footprint: MemoryFootprint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct MemoryFootprint {
    /// Persistent vectors of length `p` held for the whole run.
    pub persistent_vectors: usize,
    /// How many of those are stored per-sample gradients.
    pub stored_gradients: usize,
}

impl Workspace {
    pub fn new(p: usize) -> Self {
        Self {
            p,
            footprint: MemoryFootprint::default(),
        }
    }

    pub fn vector(&mut self) -> Vec<f64> {
        self.footprint.persistent_vectors += 1;
        vec![0.0; self.p]
    }

    pub fn copy_of(&mut self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.p);
        self.footprint.persistent_vectors += 1;
        v.to_vec()
    }

    /// Flat storage for `count` gradient vectors.
    pub fn gradient_table(&mut self, count: usize) -> Vec<f64> {
        self.footprint.persistent_vectors += count;
        self.footprint.stored_gradients += count;
        vec![0.0; count * self.p]
    }

    pub fn footprint(&self) -> MemoryFootprint {
        self.footprint
    }
}

/// Iterate triple `(x, y, β)` plus the running sums behind `x̄_T` and `ȳ_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub beta: Vec<f64>,
    /// Number of completed iterations.
    pub t: u64,
    pub x_running_sum: Vec<f64>,
    pub y_running_sum: Vec<f64>,
    /// Sample visits charged for pass accounting.
    pub samples_visited: u64,
    /// Individual `∇f_i` evaluations actually performed.
    pub gradient_evaluations: u64,
}

impl AdmmState {
    pub fn new(prob: &AdmmProblem, x0: Option<&[f64]>, ws: &mut Workspace) -> Result<Self, SolverError> {
        let x = match x0 {
            Some(x0) if x0.len() != prob.dim_x() => {
                return Err(SolverError::InvalidConfig(format!(
                    "initial point has length {}, expected {}",
                    x0.len(),
                    prob.dim_x()
                )))
            }
            Some(x0) => ws.copy_of(x0),
            None => ws.vector(),
        };
        Ok(Self {
            x,
            y: vec![0.0; prob.dim_y()],
            beta: vec![0.0; prob.dim_constraint()],
            t: 0,
            x_running_sum: ws.vector(),
            y_running_sum: vec![0.0; prob.dim_y()],
            samples_visited: 0,
            gradient_evaluations: 0,
        })
    }

    /// Adds the freshly updated `x`, `y` to the running sums and advances `t`.
    pub fn record_iterate(&mut self) -> Result<(), SolverError> {
        if !all_finite(&self.x) || !all_finite(&self.y) || !all_finite(&self.beta) {
            return Err(SolverError::NonFinite {
                iteration: self.t + 1,
                norm: norm(&self.x),
            });
        }
        self.t += 1;
        for (s, v) in self.x_running_sum.iter_mut().zip(&self.x) {
            *s += v;
        }
        for (s, v) in self.y_running_sum.iter_mut().zip(&self.y) {
            *s += v;
        }
        Ok(())
    }

    /// `x̄ = (1/t) Σ_{s=1..t} x_s`, or the current `x` before any iteration.
    pub fn x_bar(&self) -> Vec<f64> {
        average(&self.x_running_sum, self.t, &self.x)
    }

    pub fn y_bar(&self) -> Vec<f64> {
        average(&self.y_running_sum, self.t, &self.y)
    }
}

fn average(sum: &[f64], t: u64, fallback: &[f64]) -> Vec<f64> {
    if t == 0 {
        return fallback.to_vec();
    }
    let inv = t as f64;
    sum.iter().map(|s| s / inv).collect()
}

/// How long a solver runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    /// Outer iterations (SCAS, batch) or per-sample iterations (STOC, SA).
    Iterations(u64),
    /// Effective passes over the data.
    Passes(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub budget: Budget,
    pub x0: Option<Vec<f64>>,
    /// Keep every iterate triple.
    pub record_trace: bool,
    /// Also keep the inner-loop iterates of SCAS.
    pub record_inner: bool,
    /// Record a checkpoint at every recording point; when false only the
    /// final state is checkpointed.
    pub record_checkpoints: bool,
}

impl RunOptions {
    pub fn iterations(t: u64) -> Self {
        Self {
            budget: Budget::Iterations(t),
            x0: None,
            record_trace: false,
            record_inner: false,
            record_checkpoints: true,
        }
    }

    pub fn passes(p: f64) -> Self {
        Self {
            budget: Budget::Passes(p),
            ..Self::iterations(0)
        }
    }

    pub fn with_trace(mut self, inner: bool) -> Self {
        self.record_trace = true;
        self.record_inner = inner;
        self
    }

    pub fn final_checkpoint_only(mut self) -> Self {
        self.record_checkpoints = false;
        self
    }

    pub fn with_start(mut self, x0: Vec<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub(crate) fn validate(&self) -> Result<(), SolverError> {
        match self.budget {
            Budget::Iterations(0) => Err(SolverError::InvalidConfig("iteration budget must be at least 1".into())),
            Budget::Passes(p) if !(p > 0.0) || !p.is_finite() => Err(SolverError::InvalidConfig(format!(
                "pass budget must be positive, got {p}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Averaged iterates and counters at a recording point.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub iteration: u64,
    pub effective_passes: f64,
    pub samples_visited: u64,
    pub gradient_evaluations: u64,
    pub x_bar: Vec<f64>,
    pub y_bar: Vec<f64>,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub beta: Vec<f64>,
    /// SCAS inner iterates `w_0, w_1, ...` of this outer iteration.
    pub inner: Vec<Vec<f64>>,
    /// Inner-loop length `M_t` used for this outer iteration.
    pub inner_length: usize,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub beta0: Vec<f64>,
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub method: Method,
    pub x_bar: Vec<f64>,
    pub y_bar: Vec<f64>,
    /// `A x̄`, the substitute for `ȳ` used when reporting the objective.
    pub y_of_x_bar: Vec<f64>,
    pub state: AdmmState,
    pub checkpoints: Vec<Checkpoint>,
    pub trace: Option<Trace>,
    pub memory: MemoryFootprint,
    pub warnings: Vec<String>,
}

impl SolveResult {
    pub fn effective_passes(&self) -> f64 {
        self.checkpoints.last().map_or(0.0, |c| c.effective_passes)
    }
}

/// Bookkeeping shared by all solver loops.
pub(crate) struct Recorder {
    method: Method,
    n: usize,
    start: Instant,
    pub checkpoints: Vec<Checkpoint>,
    pub trace: Option<Trace>,
    pub record_inner: bool,
    record_checkpoints: bool,
    pub warnings: Vec<String>,
}

impl Recorder {
    pub fn new(method: Method, prob: &AdmmProblem, opts: &RunOptions, state: &AdmmState) -> Self {
        Self {
            method,
            n: prob.n_samples(),
            start: Instant::now(),
            checkpoints: Vec::new(),
            trace: opts.record_trace.then(|| Trace {
                x0: state.x.clone(),
                y0: state.y.clone(),
                beta0: state.beta.clone(),
                steps: Vec::new(),
            }),
            record_inner: opts.record_trace && opts.record_inner,
            record_checkpoints: opts.record_checkpoints,
            warnings: Vec::new(),
        }
    }

    pub fn passes(&self, state: &AdmmState) -> f64 {
        effective_pass_of(
            self.method,
            &PassCounters {
                n: self.n,
                samples_visited: state.samples_visited,
                outer_iterations: state.t,
            },
        )
    }

    pub fn checkpoint(&mut self, state: &AdmmState) {
        if self.record_checkpoints {
            self.push_checkpoint(state);
        }
    }

    fn push_checkpoint(&mut self, state: &AdmmState) {
        let cp = Checkpoint {
            iteration: state.t,
            effective_passes: self.passes(state),
            samples_visited: state.samples_visited,
            gradient_evaluations: state.gradient_evaluations,
            x_bar: state.x_bar(),
            y_bar: state.y_bar(),
            elapsed_seconds: self.start.elapsed().as_secs_f64(),
        };
        self.checkpoints.push(cp);
    }

    pub fn trace_step(&mut self, state: &AdmmState, inner: Vec<Vec<f64>>, inner_length: usize, eta: f64) {
        if let Some(trace) = self.trace.as_mut() {
            trace.steps.push(TraceStep {
                x: state.x.clone(),
                y: state.y.clone(),
                beta: state.beta.clone(),
                inner,
                inner_length,
                eta,
            });
        }
    }

    pub fn warn(&mut self, msg: String) {
        log::warn!("{}: {msg}", self.method);
        self.warnings.push(msg);
    }

    /// Records `msg` in the result's warnings, logging it at debug level only.
    pub fn note(&mut self, msg: String) {
        log::debug!("{}: {msg}", self.method);
        self.warnings.push(msg);
    }

    /// Assembles the result; the final state is always checkpointed.
    pub fn finish(
        mut self,
        prob: &AdmmProblem,
        state: AdmmState,
        memory: MemoryFootprint,
    ) -> Result<SolveResult, SolverError> {
        let covered = self
            .checkpoints
            .last()
            .is_some_and(|c| c.iteration == state.t && c.samples_visited == state.samples_visited);
        if !covered {
            self.push_checkpoint(&state);
        }
        let x_bar = state.x_bar();
        let y_bar = state.y_bar();
        let y_of_x_bar = prob.constraint().a().matvec(&x_bar)?;
        Ok(SolveResult {
            method: self.method,
            x_bar,
            y_bar,
            y_of_x_bar,
            state,
            checkpoints: self.checkpoints,
            trace: self.trace,
            memory,
            warnings: self.warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;
    use crate::model::{ConstraintSpec, LossSpec, SampleSet};
    use std::sync::Arc;

    fn tiny() -> AdmmProblem {
        let s = SampleSet::new(CsrMatrix::identity(2), vec![1.0, -1.0]).unwrap();
        AdmmProblem::new(
            Arc::new(s),
            LossSpec::logistic(0.0),
            0.1,
            Arc::new(ConstraintSpec::difference(CsrMatrix::identity(2))),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn running_sums_track_iterates() {
        let prob = tiny();
        let mut ws = Workspace::new(2);
        let mut st = AdmmState::new(&prob, None, &mut ws).unwrap();
        assert_eq!(st.x_bar(), vec![0.0, 0.0]);
        let xs = [[1.0, 2.0], [3.0, -1.0], [0.5, 0.5]];
        for x in xs {
            st.x = x.to_vec();
            st.y = vec![x[0], 0.0];
            st.record_iterate().unwrap();
        }
        assert_eq!(st.t, 3);
        assert_eq!(st.x_bar(), vec![4.5 / 3.0, 1.5 / 3.0]);
        assert_eq!(st.y_bar(), vec![4.5 / 3.0, 0.0]);
        assert_eq!(ws.footprint().persistent_vectors, 2);
    }

    #[test]
    fn non_finite_iterate_is_reported() {
        let prob = tiny();
        let mut ws = Workspace::new(2);
        let mut st = AdmmState::new(&prob, None, &mut ws).unwrap();
        st.x[1] = f64::NAN;
        assert!(matches!(
            st.record_iterate(),
            Err(SolverError::NonFinite { iteration: 1, .. })
        ));
    }

    #[test]
    fn budgets_are_validated() {
        assert!(RunOptions::iterations(0).validate().is_err());
        assert!(RunOptions::passes(0.0).validate().is_err());
        assert!(RunOptions::passes(2.0).validate().is_ok());
    }
}
