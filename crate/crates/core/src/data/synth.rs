use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{build_ggfl_constraint, random_edges, DataError, Edge};
use crate::linalg::CsrMatrix;
use crate::model::{AdmmProblem, LossSpec, SampleSet};

/// A seeded graph-guided fused lasso instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub p: usize,
    pub n: usize,
    pub edges: Vec<Edge>,
    pub loss: LossSpec,
    pub lambda: f64,
    pub rho: f64,
    /// Standard deviation of the label noise added to `aᵀx*`.
    pub noise: f64,
    /// Typical `||a_i||`.
    pub feature_scale: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Logistic loss, `n_edges` random edges drawn from `seed`.
    pub fn new(p: usize, n: usize, n_edges: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Self {
            p,
            n,
            edges: random_edges(p, n_edges, &mut rng),
            loss: LossSpec::logistic(0.0),
            lambda: 1e-3,
            rho: 1.0,
            noise: 0.1,
            feature_scale: 1.0,
            seed,
        }
    }
}

/// Draws a planted `x*` that is sparse and constant along edges, Gaussian
/// features whose edge endpoints are correlated, and labels
/// `b = sign(aᵀx* + noise·ε)` with `sign(0) = +1`.
pub fn synth_samples(
    p: usize,
    n: usize,
    edges: &[Edge],
    noise: f64,
    feature_scale: f64,
    seed: u64,
) -> Result<(SampleSet, Vec<f64>), DataError> {
    if p == 0 || n == 0 {
        return Err(DataError::Invalid(format!(
            "p and n must be at least 1, got p = {p}, n = {n}"
        )));
    }
    if let Some(&(i, j)) = edges.iter().find(|&&(i, j)| i >= p || j >= p) {
        return Err(DataError::Invalid(format!(
            "edge ({i}, {j}) has an endpoint outside 0..{p}"
        )));
    }
    if !(noise >= 0.0) || !(feature_scale > 0.0) {
        return Err(DataError::Invalid("noise must be >= 0 and feature scale > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planted = vec![0.0; p];
    let support = (p / 4).max(1);
    for _ in 0..support {
        let k = rng.random_range(0..p);
        let z: f64 = rng.sample(StandardNormal);
        planted[k] = z.signum() * (0.5 + z.abs());
    }
    for &(i, j) in edges {
        planted[j] = planted[i];
    }
    let unit = feature_scale / (p as f64).sqrt();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut a: Vec<f64> = (0..p).map(|_| unit * rng.sample::<f64, _>(StandardNormal)).collect();
        for &(i, j) in edges {
            a[j] = 0.8 * a[i] + 0.6 * a[j];
        }
        let eps: f64 = rng.sample(StandardNormal);
        let score = a.iter().zip(&planted).map(|(u, v)| u * v).sum::<f64>() + noise * eps;
        labels.push(if score >= 0.0 { 1.0 } else { -1.0 });
        rows.push(a);
    }
    let features = CsrMatrix::from_dense(&rows, p)?;
    Ok((SampleSet::new(features, labels)?, planted))
}

/// The problem `min (1/n)Σ f_i(x) + λ||Ax||₁` with `A = [G; I]` for the
/// graph, plus the planted vector.
pub fn synth_problem(spec: &SynthSpec) -> Result<(AdmmProblem, Vec<f64>), DataError> {
    let (samples, planted) = synth_samples(spec.p, spec.n, &spec.edges, spec.noise, spec.feature_scale, spec.seed)?;
    let constraint = build_ggfl_constraint(spec.p, &spec.edges)?;
    let prob = AdmmProblem::new(
        Arc::new(samples),
        spec.loss,
        spec.lambda,
        Arc::new(constraint),
        spec.rho,
    )?;
    Ok((prob, planted))
}
