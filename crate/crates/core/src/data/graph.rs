use std::collections::BTreeSet;

use rand::Rng;

use super::DataError;
use crate::exec::Exec;
use crate::linalg::CsrMatrix;
use crate::model::{ConstraintSpec, SampleSet};

/// Undirected edge `(i, j)` between feature indices.
pub type Edge = (usize, usize);

/// Rows accumulated per task when forming the second-moment matrix. Fixed so
/// the summation order does not depend on the thread count.
const ROW_BLOCK: usize = 512;

/// Edges `(i, j)`, `i < j`, whose absolute Pearson correlation over the rows of
/// `train` exceeds `tau`. Constant features get no edges. Uses a dense `p × p`
/// moment matrix, so it suits feature dimensions in the low thousands.
pub fn build_correlation_graph(train: &SampleSet, tau: f64, exec: Exec) -> Vec<Edge> {
    let p = train.n_features();
    let n = train.len();
    if !(tau < 1.0) || n == 0 || p < 2 {
        return Vec::new();
    }
    let x = train.features();
    let blocks = n.div_ceil(ROW_BLOCK);
    let partial = exec.map_indices(blocks, |b| {
        block_moments(x, b * ROW_BLOCK, ((b + 1) * ROW_BLOCK).min(n))
    });
    let mut sum = vec![0.0; p];
    let mut second = vec![0.0; p * p];
    for (s, m) in &partial {
        for (a, v) in sum.iter_mut().zip(s) {
            *a += v;
        }
        for (a, v) in second.iter_mut().zip(m) {
            *a += v;
        }
    }
    let nf = n as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let var: Vec<f64> = (0..p)
        .map(|i| {
            let ex2 = second[i * p + i] / nf;
            let v = ex2 - mean[i] * mean[i];
            if v <= 1e-12 * ex2.max(f64::MIN_POSITIVE) {
                0.0
            } else {
                v
            }
        })
        .collect();
    let rows = exec.map_indices(p, |i| {
        let mut out = Vec::new();
        if var[i] == 0.0 {
            return out;
        }
        for j in i + 1..p {
            if var[j] == 0.0 {
                continue;
            }
            let cov = second[i * p + j] / nf - mean[i] * mean[j];
            let corr = cov / (var[i] * var[j]).sqrt();
            if corr.abs() > tau {
                out.push((i, j));
            }
        }
        out
    });
    rows.into_iter().flatten().collect()
}

/// Column sums and the upper triangle of `Σ a aᵀ` over rows `lo..hi`.
fn block_moments(x: &CsrMatrix, lo: usize, hi: usize) -> (Vec<f64>, Vec<f64>) {
    let p = x.n_cols();
    let mut sum = vec![0.0; p];
    let mut second = vec![0.0; p * p];
    for r in lo..hi {
        let (cols, vals) = x.row(r);
        for (k, (&c, &v)) in cols.iter().zip(vals).enumerate() {
            sum[c] += v;
            for (&c2, &v2) in cols[k..].iter().zip(&vals[k..]) {
                let (a, b) = if c <= c2 { (c, c2) } else { (c2, c) };
                second[a * p + b] += v * v2;
            }
        }
    }
    (sum, second)
}

/// `A = [G; I]` where `G` has a row `e_i - e_j` per edge, `B = -I`, `c = 0`.
pub fn build_ggfl_constraint(p: usize, edges: &[Edge]) -> Result<ConstraintSpec, DataError> {
    let mut triplets = Vec::with_capacity(2 * edges.len());
    for (r, &(i, j)) in edges.iter().enumerate() {
        if i >= p || j >= p {
            return Err(DataError::Invalid(format!(
                "edge ({i}, {j}) has an endpoint outside 0..{p}"
            )));
        }
        if i == j {
            return Err(DataError::Invalid(format!("edge ({i}, {j}) is a self-loop")));
        }
        triplets.push((r, i, 1.0));
        triplets.push((r, j, -1.0));
    }
    let g = CsrMatrix::from_triplets(edges.len(), p, &triplets)?;
    let a = CsrMatrix::vstack(&g, &CsrMatrix::identity(p))?;
    Ok(ConstraintSpec::difference(a))
}

/// `count` distinct edges `(i, j)`, `i < j`, drawn uniformly; capped at
/// `p(p-1)/2`. Returned in draw order.
pub fn random_edges<R: Rng + ?Sized>(p: usize, count: usize, rng: &mut R) -> Vec<Edge> {
    let max = p * p.saturating_sub(1) / 2;
    let count = count.min(max);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let i = rng.random_range(0..p);
        let j = rng.random_range(0..p);
        if i == j {
            continue;
        }
        let e = (i.min(j), i.max(j));
        if seen.insert(e) {
            out.push(e);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn samples(rows: Vec<Vec<f64>>) -> SampleSet {
        let p = rows[0].len();
        let n = rows.len();
        SampleSet::new(CsrMatrix::from_dense(&rows, p).unwrap(), vec![1.0; n]).unwrap()
    }

    #[test]
    fn duplicated_columns_are_linked() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| {
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                vec![a, b, a]
            })
            .collect();
        let s = samples(rows);
        for tau in [0.0, 0.5, 0.999_999] {
            assert!(build_correlation_graph(&s, tau, Exec::Sequential).contains(&(0, 2)));
        }
        assert!(build_correlation_graph(&s, 1.0, Exec::Sequential).is_empty());
    }

    #[test]
    fn constant_features_have_no_edges() {
        let s = samples(vec![vec![1.0, 3.0], vec![2.0, 3.0], vec![4.0, 3.0]]);
        assert!(build_correlation_graph(&s, 0.0, Exec::Sequential).is_empty());
    }

    #[test]
    fn policies_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..1500)
            .map(|_| {
                let z: f64 = rng.random_range(-1.0..1.0);
                (0..6)
                    .map(|k| {
                        if k % 2 == 0 {
                            z + 0.3 * rng.random_range(-1.0..1.0)
                        } else {
                            rng.random_range(-1.0..1.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let s = samples(rows);
        let a = build_correlation_graph(&s, 0.5, Exec::Sequential);
        assert_eq!(a, build_correlation_graph(&s, 0.5, Exec::Parallel));
        assert_eq!(a, vec![(0, 2), (0, 4), (2, 4)]);
    }

    #[test]
    fn ggfl_shape() {
        let c = build_ggfl_constraint(3, &[(0, 1)]).unwrap();
        assert_eq!(
            c.a().to_dense(),
            vec![
                vec![1.0, -1.0, 0.0],
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0]
            ]
        );
        assert!(c.b_is_negative_identity());
        assert_eq!(c.c(), &[0.0; 4]);
        let plain = build_ggfl_constraint(4, &[]).unwrap();
        assert_eq!(plain.a(), &CsrMatrix::identity(4));
        assert!(build_ggfl_constraint(3, &[(0, 3)]).is_err());
        assert!(build_ggfl_constraint(3, &[(1, 1)]).is_err());
    }

    #[test]
    fn random_edges_are_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = random_edges(6, 10, &mut rng);
        assert_eq!(e.len(), 10);
        let set: BTreeSet<_> = e.iter().collect();
        assert_eq!(set.len(), 10);
        assert!(e.iter().all(|&(i, j)| i < j && j < 6));
        assert_eq!(random_edges(3, 100, &mut rng).len(), 3);
        assert!(random_edges(1, 5, &mut rng).is_empty());
    }
}
