//! Problem definition: finite-sum smooth losses with per-sample gradient
//! oracles, the L1 regularizer, the linear constraint `Ax + By = c`, and the
//! smoothness constants the solvers need.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::linalg::vector::{dot, norm_l1, norm_sq};
use crate::linalg::{gram_min_eigenvalue, gram_top_eigenvalue, CsrMatrix, EigenEstimate, LinalgError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("sample index {index} out of range for {n} samples")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("labels must be +1 or -1 (found {value} at sample {index})")]
    BadLabel { index: usize, value: f64 },
    #[error("{what}: expected length {expected}, got {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid parameter {name} = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), ModelError> {
    if expected == found {
        Ok(())
    } else {
        Err(ModelError::Dimension { what, expected, found })
    }
}

/// Training samples: row `i` of `features` is `a_i`, `labels[i]` is `b_i ∈ {-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    features: CsrMatrix,
    labels: Vec<f64>,
}

impl SampleSet {
    pub fn new(features: CsrMatrix, labels: Vec<f64>) -> Result<Self, ModelError> {
        check_len("labels", features.n_rows(), labels.len())?;
        if let Some((index, &value)) = labels.iter().enumerate().find(|(_, &b)| b != 1.0 && b != -1.0) {
            return Err(ModelError::BadLabel { index, value });
        }
        Ok(Self { features, labels })
    }

    pub fn features(&self) -> &CsrMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    /// The samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> SampleSet {
        SampleSet {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// `log(1 + exp(-b aᵀx))`
    Logistic,
    /// `(b - aᵀx)²`
    Squared,
}

impl std::str::FromStr for LossKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logistic" => Ok(LossKind::Logistic),
            "squared" => Ok(LossKind::Squared),
            other => Err(format!("unknown loss '{other}' (expected logistic or squared)")),
        }
    }
}

/// Per-sample loss plus an L2 term `(μ/2)||x||²` folded into every `f_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    pub l2_strength: f64,
}

impl LossSpec {
    pub fn logistic(mu: f64) -> Self {
        Self {
            kind: LossKind::Logistic,
            l2_strength: mu,
        }
    }

    pub fn squared(mu: f64) -> Self {
        Self {
            kind: LossKind::Squared,
            l2_strength: mu,
        }
    }

    pub fn is_strongly_convex(&self) -> bool {
        self.l2_strength > 0.0
    }

    /// Data part of the loss at margin `z = aᵀx`.
    #[inline]
    pub fn value_at_margin(&self, label: f64, z: f64) -> f64 {
        match self.kind {
            LossKind::Logistic => softplus(-label * z),
            LossKind::Squared => {
                let r = label - z;
                r * r
            }
        }
    }

    /// Derivative of the data part with respect to the margin.
    #[inline]
    pub fn derivative_at_margin(&self, label: f64, z: f64) -> f64 {
        match self.kind {
            LossKind::Logistic => -label * sigmoid(-label * z),
            LossKind::Squared => -2.0 * (label - z),
        }
    }
}

/// `log(1 + exp(t))` without overflow.
#[inline]
pub fn softplus(t: f64) -> f64 {
    (-t.abs()).exp().ln_1p() + t.max(0.0)
}

/// `1 / (1 + exp(-t))` without overflow.
#[inline]
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `Ax + By = c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    a: CsrMatrix,
    b: CsrMatrix,
    c: Vec<f64>,
    b_is_negative_identity: bool,
}

impl ConstraintSpec {
    pub fn new(a: CsrMatrix, b: CsrMatrix, c: Vec<f64>) -> Result<Self, ModelError> {
        check_len("B rows", a.n_rows(), b.n_rows())?;
        check_len("c", a.n_rows(), c.len())?;
        let b_is_negative_identity = b.is_negative_identity();
        Ok(Self {
            a,
            b,
            c,
            b_is_negative_identity,
        })
    }

    /// `Ax - y = 0`.
    pub fn difference(a: CsrMatrix) -> Self {
        let l = a.n_rows();
        Self {
            a,
            b: CsrMatrix::scaled_identity(l, -1.0),
            c: vec![0.0; l],
            b_is_negative_identity: true,
        }
    }

    pub fn a(&self) -> &CsrMatrix {
        &self.a
    }

    pub fn b(&self) -> &CsrMatrix {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Number of constraint rows `l`.
    pub fn n_rows(&self) -> usize {
        self.a.n_rows()
    }

    pub fn b_is_negative_identity(&self) -> bool {
        self.b_is_negative_identity
    }

    /// `Ax + By - c`.
    pub fn residual(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, ModelError> {
        let mut r = self.a.matvec(x)?;
        let by = self.b.matvec(y)?;
        for ((ri, bi), ci) in r.iter_mut().zip(&by).zip(&self.c) {
            *ri = *ri + bi - ci;
        }
        Ok(r)
    }

    /// `By - c`.
    pub fn by_minus_c(&self, y: &[f64]) -> Result<Vec<f64>, ModelError> {
        let mut r = self.b.matvec(y)?;
        for (ri, ci) in r.iter_mut().zip(&self.c) {
            *ri -= ci;
        }
        Ok(r)
    }
}

/// `min (1/n) Σ f_i(x) + λ||y||₁  s.t. Ax + By = c`, with penalty `ρ`.
#[derive(Debug, Clone)]
pub struct AdmmProblem {
    samples: Arc<SampleSet>,
    loss: LossSpec,
    l1_strength: f64,
    constraint: Arc<ConstraintSpec>,
    rho: f64,
}

impl AdmmProblem {
    pub fn new(
        samples: Arc<SampleSet>,
        loss: LossSpec,
        l1_strength: f64,
        constraint: Arc<ConstraintSpec>,
        rho: f64,
    ) -> Result<Self, ModelError> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(ModelError::Parameter {
                name: "rho",
                value: rho,
                reason: "must be positive and finite",
            });
        }
        if !(l1_strength >= 0.0) || !l1_strength.is_finite() {
            return Err(ModelError::Parameter {
                name: "lambda",
                value: l1_strength,
                reason: "must be non-negative and finite",
            });
        }
        if !(loss.l2_strength >= 0.0) || !loss.l2_strength.is_finite() {
            return Err(ModelError::Parameter {
                name: "mu",
                value: loss.l2_strength,
                reason: "must be non-negative and finite",
            });
        }
        if samples.is_empty() {
            return Err(ModelError::Parameter {
                name: "n",
                value: 0.0,
                reason: "at least one sample is required",
            });
        }
        check_len("A columns", samples.n_features(), constraint.a().n_cols())?;
        Ok(Self {
            samples,
            loss,
            l1_strength,
            constraint,
            rho,
        })
    }

    /// Same problem with a different penalty parameter. Shares the data.
    pub fn with_rho(&self, rho: f64) -> Result<Self, ModelError> {
        Self::new(
            self.samples.clone(),
            self.loss,
            self.l1_strength,
            self.constraint.clone(),
            rho,
        )
    }

    /// Same problem on different samples (same loss, λ, constraint, ρ).
    pub fn with_samples(&self, samples: Arc<SampleSet>) -> Result<Self, ModelError> {
        Self::new(samples, self.loss, self.l1_strength, self.constraint.clone(), self.rho)
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    pub fn shared_samples(&self) -> &Arc<SampleSet> {
        &self.samples
    }

    pub fn loss(&self) -> LossSpec {
        self.loss
    }

    pub fn l1_strength(&self) -> f64 {
        self.l1_strength
    }

    pub fn constraint(&self) -> &ConstraintSpec {
        &self.constraint
    }

    pub fn shared_constraint(&self) -> &Arc<ConstraintSpec> {
        &self.constraint
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    /// Dimension `p` of `x`.
    pub fn dim_x(&self) -> usize {
        self.samples.n_features()
    }

    /// Dimension `q` of `y`.
    pub fn dim_y(&self) -> usize {
        self.constraint.b().n_cols()
    }

    /// Number of constraint rows `l`.
    pub fn dim_constraint(&self) -> usize {
        self.constraint.n_rows()
    }

    fn check_index(&self, i: usize) -> Result<(), ModelError> {
        if i < self.n_samples() {
            Ok(())
        } else {
            Err(ModelError::IndexOutOfRange {
                index: i,
                n: self.n_samples(),
            })
        }
    }

    #[inline]
    pub(crate) fn margin(&self, i: usize, x: &[f64]) -> f64 {
        self.samples.features.row_dot(i, x)
    }

    /// `∂f_i/∂(aᵢᵀx)` at `x`; the data part of `∇f_i(x)` is this times `a_i`.
    #[inline]
    pub(crate) fn grad_coefficient(&self, i: usize, x: &[f64]) -> f64 {
        self.loss
            .derivative_at_margin(self.samples.labels[i], self.margin(i, x))
    }

    /// `f_i(x)`, including the L2 term.
    pub fn sample_loss(&self, i: usize, x: &[f64]) -> Result<f64, ModelError> {
        self.check_index(i)?;
        check_len("x", self.dim_x(), x.len())?;
        let data = self.loss.value_at_margin(self.samples.labels[i], self.margin(i, x));
        Ok(data + 0.5 * self.loss.l2_strength * norm_sq(x))
    }

    /// `∇f_i(x)` as a dense vector.
    pub fn sample_grad(&self, i: usize, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_index(i)?;
        check_len("x", self.dim_x(), x.len())?;
        let mut g = vec![0.0; x.len()];
        self.sample_grad_into(i, x, &mut g);
        Ok(g)
    }

    /// `out = ∇f_i(x)`. Sizes are the caller's responsibility.
    pub(crate) fn sample_grad_into(&self, i: usize, x: &[f64], out: &mut [f64]) {
        let mu = self.loss.l2_strength;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = mu * xi;
        }
        let coef = self.grad_coefficient(i, x);
        let (cols, vals) = self.samples.features.row(i);
        for (&c, &a) in cols.iter().zip(vals) {
            out[c] += coef * a;
        }
    }

    /// `∇f(x) = (1/n) Σ ∇f_i(x)`, summed in ascending `i`.
    pub fn full_grad(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.full_grad_with(Exec::Sequential, x)
    }

    /// [`AdmmProblem::full_grad`] with the per-sample margins evaluated under
    /// `exec`. The accumulation itself is always sequential, so the result does
    /// not depend on the policy.
    pub fn full_grad_with(&self, exec: Exec, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        check_len("x", self.dim_x(), x.len())?;
        let mut g = vec![0.0; x.len()];
        match exec.is_parallel() {
            true => {
                let coefs = exec.map_indices(self.n_samples(), |i| self.grad_coefficient(i, x));
                self.accumulate_grad(x, |i| coefs[i], &mut g);
            }
            false => self.accumulate_grad(x, |i| self.grad_coefficient(i, x), &mut g),
        }
        Ok(g)
    }

    pub(crate) fn full_grad_into(&self, x: &[f64], out: &mut [f64]) {
        self.accumulate_grad(x, |i| self.grad_coefficient(i, x), out);
    }

    fn accumulate_grad(&self, x: &[f64], coef: impl Fn(usize) -> f64, out: &mut [f64]) {
        let n = self.n_samples();
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..n {
            let ci = coef(i);
            let (cols, vals) = self.samples.features.row(i);
            for (&c, &a) in cols.iter().zip(vals) {
                out[c] += ci * a;
            }
        }
        let n_f = n as f64;
        let mu = self.loss.l2_strength;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = *o / n_f + mu * xi;
        }
    }

    /// `f(x) = (1/n) Σ f_i(x)`.
    pub fn mean_loss(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.mean_loss_with(Exec::Sequential, x)
    }

    pub fn mean_loss_with(&self, exec: Exec, x: &[f64]) -> Result<f64, ModelError> {
        check_len("x", self.dim_x(), x.len())?;
        let data = self.mean_data_loss_with(exec, self.loss, x);
        Ok(data + 0.5 * self.loss.l2_strength * norm_sq(x))
    }

    /// Mean of the unregularized per-sample loss of kind `loss.kind`.
    pub(crate) fn mean_data_loss_with(&self, exec: Exec, loss: LossSpec, x: &[f64]) -> f64 {
        let labels = &self.samples.labels;
        let terms = exec.map_indices(self.n_samples(), |i| loss.value_at_margin(labels[i], self.margin(i, x)));
        terms.iter().sum::<f64>() / self.n_samples() as f64
    }

    /// `g(y) = λ||y||₁`.
    pub fn regularizer(&self, y: &[f64]) -> f64 {
        self.l1_strength * norm_l1(y)
    }

    /// `P(x, y) = f(x) + λ||y||₁`.
    pub fn objective(&self, x: &[f64], y: &[f64]) -> Result<f64, ModelError> {
        self.objective_with(Exec::Sequential, x, y)
    }

    pub fn objective_with(&self, exec: Exec, x: &[f64], y: &[f64]) -> Result<f64, ModelError> {
        check_len("y", self.dim_y(), y.len())?;
        Ok(self.mean_loss_with(exec, x)? + self.regularizer(y))
    }

    /// `P(x, y)` at `y = Ax`, the feasible completion used for reporting.
    pub fn objective_at_ax(&self, exec: Exec, x: &[f64]) -> Result<f64, ModelError> {
        let ax = self.constraint.a().matvec(x)?;
        Ok(self.mean_loss_with(exec, x)? + self.l1_strength * norm_l1(&ax))
    }

    /// `L(x, y, β) = f(x) + g(y) + βᵀr + (ρ/2)||r||²` with `r = Ax + By - c`.
    pub fn augmented_lagrangian(&self, x: &[f64], y: &[f64], beta: &[f64]) -> Result<f64, ModelError> {
        check_len("beta", self.dim_constraint(), beta.len())?;
        let p = self.objective(x, y)?;
        let r = self.constraint.residual(x, y)?;
        Ok(p + dot(beta, &r) + 0.5 * self.rho * norm_sq(&r))
    }

    /// Per-sample smoothness constant `ν_f` valid for every `f_i`.
    pub fn smoothness_constant(&self) -> f64 {
        let max_row = (0..self.n_samples())
            .map(|i| self.samples.features.row_norm_sq(i))
            .fold(0.0, f64::max);
        let data = match self.loss.kind {
            LossKind::Logistic => max_row / 4.0,
            LossKind::Squared => 2.0 * max_row,
        };
        data + self.loss.l2_strength
    }

    /// Largest eigenvalue `λ₁` of `AᵀA`.
    pub fn constraint_top_eigenvalue(&self) -> Result<EigenEstimate, ModelError> {
        if self.constraint.a().nnz() == 0 {
            return Ok(EigenEstimate {
                value: 0.0,
                iterations: 0,
                converged: true,
            });
        }
        Ok(gram_top_eigenvalue(self.constraint.a(), 1e-10, 10_000)?)
    }

    /// Smallest eigenvalue of `AᵀA`.
    pub fn constraint_min_eigenvalue(&self) -> Result<EigenEstimate, ModelError> {
        if self.constraint.a().nnz() == 0 {
            return Ok(EigenEstimate {
                value: 0.0,
                iterations: 0,
                converged: true,
            });
        }
        Ok(gram_min_eigenvalue(self.constraint.a(), 1e-10, 10_000)?)
    }

    /// Smoothness constant of `L(x) = f(x) + βᵀ(Ax+By-c) + (ρ/2)||Ax+By-c||²`
    /// in `x`: `ν_f + ρ·λ_max(AᵀA)`. The flag is false when the eigenvalue
    /// estimate hit its iteration cap.
    pub fn nu_l(&self) -> Result<(f64, bool), ModelError> {
        let eig = self.constraint_top_eigenvalue()?;
        Ok((self.smoothness_constant() + self.rho * eig.value, eig.converged))
    }

    /// Strong convexity constant of `L(x)`: `μ_f + ρ·λ_min(AᵀA)`.
    pub fn mu_l(&self) -> Result<f64, ModelError> {
        let eig = self.constraint_min_eigenvalue()?;
        Ok(self.loss.l2_strength + self.rho * eig.value)
    }

    /// `∇L(x)` for fixed `y`, `β`: `∇f(x) + Aᵀ(β + ρ(Ax + By - c))`.
    pub fn lagrangian_grad(&self, x: &[f64], y: &[f64], beta: &[f64]) -> Result<Vec<f64>, ModelError> {
        let mut g = self.full_grad(x)?;
        let mut r = self.constraint.residual(x, y)?;
        for (ri, bi) in r.iter_mut().zip(beta) {
            *ri = bi + self.rho * *ri;
        }
        let at = self.constraint.a().matvec_transpose(&r)?;
        for (gi, ai) in g.iter_mut().zip(&at) {
            *gi += ai;
        }
        Ok(g)
    }
}
