//! Stochastic ADMM with variance reduction (SCAS) for finite-sum problems
//! `min f(x) + λ||y||₁  s.t.  Ax + By = c`, together with batch, stochastic and
//! stochastic-average ADMM baselines, a graph-guided fused lasso data
//! pipeline, and a benchmark harness reporting metrics per effective pass.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accounting;
pub mod bench;
pub mod cli;
pub mod data;
pub mod exec;
pub mod linalg;
pub mod model;
pub mod solvers;
