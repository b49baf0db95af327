//! Test-side oracles: dense linear algebra and loss formulas written
//! independently of the library.
#![allow(dead_code)]

use std::error::Error;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scas_admm::linalg::CsrMatrix;
use scas_admm::model::{AdmmProblem, ConstraintSpec, LossSpec, SampleSet};

pub type BoxResult<T> = Result<T, Box<dyn Error>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller keeps the oracle free of the library's sampling code.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| scale * gaussian(rng)).collect())
        .collect()
}

pub fn random_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| scale * gaussian(rng)).collect()
}

/// Random `[G; I]` rows for `edges` random pairs.
pub fn random_ggfl_rows(rng: &mut ChaCha8Rng, p: usize, edges: usize) -> Vec<Vec<f64>> {
    let mut rows = Vec::new();
    for _ in 0..edges {
        let i = rng.random_range(0..p);
        let mut j = rng.random_range(0..p);
        while j == i {
            j = rng.random_range(0..p);
        }
        let mut r = vec![0.0; p];
        r[i] = 1.0;
        r[j] = -1.0;
        rows.push(r);
    }
    rows.extend(identity(p));
    rows
}

pub fn identity(p: usize) -> Vec<Vec<f64>> {
    (0..p)
        .map(|k| {
            let mut r = vec![0.0; p];
            r[k] = 1.0;
            r
        })
        .collect()
}

/// Dense copy of a problem's data and constraint matrix.
#[derive(Debug, Clone)]
pub struct Dense {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub a: Vec<Vec<f64>>,
}

impl Dense {
    pub fn p(&self) -> usize {
        self.features[0].len()
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Gaussian features scaled by `1/√p`, random ±1 labels, GGFL rows for
    /// `edges` random pairs.
    pub fn random(rng: &mut ChaCha8Rng, n: usize, p: usize, edges: usize) -> Self {
        let features = random_rows(rng, n, p, 1.0 / (p as f64).sqrt());
        let labels = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let a = random_ggfl_rows(rng, p, edges);
        Self { features, labels, a }
    }

    pub fn problem(&self, loss: LossSpec, lambda: f64, rho: f64) -> BoxResult<AdmmProblem> {
        let p = self.p();
        let samples = SampleSet::new(CsrMatrix::from_dense(&self.features, p)?, self.labels.clone())?;
        let cons = ConstraintSpec::difference(CsrMatrix::from_dense(&self.a, p)?);
        Ok(AdmmProblem::new(Arc::new(samples), loss, lambda, Arc::new(cons), rho)?)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|r| dot(r, v)).collect()
}

pub fn mat_t_vec(m: &[Vec<f64>], v: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for (r, vi) in m.iter().zip(v) {
        for (o, a) in out.iter_mut().zip(r) {
            *o += a * vi;
        }
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

/// Logistic loss `log(1 + exp(-b z))` and its derivative in `z`.
pub fn logistic(b: f64, z: f64) -> (f64, f64) {
    let t = -b * z;
    let value = if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    };
    let sig = 1.0 / (1.0 + (-t).exp());
    (value, -b * sig)
}

/// `∇f_i(x)` for logistic loss plus `(μ/2)||x||²`.
pub fn logistic_grad(a: &[f64], b: f64, mu: f64, x: &[f64]) -> Vec<f64> {
    let (_, d) = logistic(b, dot(a, x));
    a.iter().zip(x).map(|(aj, xj)| d * aj + mu * xj).collect()
}

pub fn logistic_full_grad(d: &Dense, mu: f64, x: &[f64]) -> Vec<f64> {
    let n = d.n() as f64;
    let mut g = vec![0.0; x.len()];
    for (a, &b) in d.features.iter().zip(&d.labels) {
        for (gj, v) in g.iter_mut().zip(logistic_grad(a, b, mu, x)) {
            *gj += v / n;
        }
    }
    g
}

/// Solves the dense system `m x = rhs` by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn dense_solve(m: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let k = rhs.len();
    let mut aug: Vec<Vec<f64>> = m
        .iter()
        .zip(rhs)
        .map(|(row, r)| {
            let mut v = row.clone();
            v.push(*r);
            v
        })
        .collect();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))
            .unwrap();
        aug.swap(col, piv);
        for row in col + 1..k {
            let f = aug[row][col] / aug[col][col];
            for c in col..=k {
                aug[row][c] -= f * aug[col][c];
            }
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| aug[row][c] * x[c]).sum();
        x[row] = (aug[row][k] - s) / aug[row][row];
    }
    x
}

/// `MᵀM` for a dense matrix with `cols` columns.
pub fn gram(m: &[Vec<f64>], cols: usize) -> Vec<Vec<f64>> {
    let mut g = vec![vec![0.0; cols]; cols];
    for row in m {
        for i in 0..cols {
            for j in 0..cols {
                g[i][j] += row[i] * row[j];
            }
        }
    }
    g
}
