use super::LinalgError;
use crate::exec::Exec;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays after checking every structural invariant.
    pub fn from_raw(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, LinalgError> {
        if row_offsets.len() != n_rows + 1 {
            return Err(LinalgError::InvalidStructure(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if row_offsets[0] != 0 || row_offsets[n_rows] != values.len() {
            return Err(LinalgError::InvalidStructure(
                "row_offsets must start at 0 and end at nnz".into(),
            ));
        }
        if col_indices.len() != values.len() {
            return Err(LinalgError::InvalidStructure(format!(
                "{} column indices for {} values",
                col_indices.len(),
                values.len()
            )));
        }
        for r in 0..n_rows {
            let (lo, hi) = (row_offsets[r], row_offsets[r + 1]);
            if lo > hi {
                return Err(LinalgError::InvalidStructure(format!(
                    "row_offsets decreases at row {r}"
                )));
            }
            let cols = &col_indices[lo..hi];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(LinalgError::InvalidStructure(format!(
                    "column indices of row {r} are not strictly increasing"
                )));
            }
            if let Some(&c) = cols.last() {
                if c >= n_cols {
                    return Err(LinalgError::OutOfBounds {
                        row: r,
                        col: c,
                        n_rows,
                        n_cols,
                    });
                }
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicate positions are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, LinalgError> {
        for &(row, col, _) in triplets {
            if row >= n_rows || col >= n_cols {
                return Err(LinalgError::OutOfBounds {
                    row,
                    col,
                    n_rows,
                    n_cols,
                });
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        // stable sort keeps duplicate summation in input order
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            col_indices.push(c);
            values.push(v);
            row_offsets[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Self::from_raw(n_rows, n_cols, row_offsets, col_indices, values)
    }

    /// Builds a matrix from dense rows, keeping only nonzero entries.
    pub fn from_dense(rows: &[Vec<f64>], n_cols: usize) -> Result<Self, LinalgError> {
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for row in rows {
            if row.len() != n_cols {
                return Err(LinalgError::DimensionMismatch {
                    op: "from_dense",
                    expected: n_cols,
                    found: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    col_indices.push(c);
                    values.push(v);
                }
            }
            row_offsets.push(values.len());
        }
        Self::from_raw(rows.len(), n_cols, row_offsets, col_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// `scale * I`.
    pub fn scaled_identity(n: usize, scale: f64) -> Self {
        let mut m = Self::identity(n);
        m.values.iter_mut().for_each(|v| *v = scale);
        m
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    #[inline]
    pub fn row_dot(&self, r: usize, v: &[f64]) -> f64 {
        let (cols, vals) = self.row(r);
        let mut acc = 0.0;
        for (&c, &a) in cols.iter().zip(vals) {
            acc += a * v[c];
        }
        acc
    }

    pub fn row_norm_sq(&self, r: usize) -> f64 {
        self.row(r).1.iter().map(|a| a * a).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, row) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        out
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for &r in rows {
            let (cols, vals) = self.row(r);
            col_indices.extend_from_slice(cols);
            values.extend_from_slice(vals);
            row_offsets.push(values.len());
        }
        Self {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    fn check_len(&self, op: &'static str, expected: usize, found: usize) -> Result<(), LinalgError> {
        if expected != found {
            return Err(LinalgError::DimensionMismatch { op, expected, found });
        }
        Ok(())
    }

    /// `m * v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut out = vec![0.0; self.n_rows];
        self.matvec_into(v, &mut out)?;
        Ok(out)
    }

    /// `out = m * v`.
    pub fn matvec_into(&self, v: &[f64], out: &mut [f64]) -> Result<(), LinalgError> {
        self.check_len("matvec (input)", self.n_cols, v.len())?;
        self.check_len("matvec (output)", self.n_rows, out.len())?;
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.row_dot(r, v);
        }
        Ok(())
    }

    /// Row-parallel `m * v`. Each row is still summed in ascending column
    /// order, so the result is identical to [`CsrMatrix::matvec`].
    pub fn matvec_with(&self, exec: Exec, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        self.check_len("matvec (input)", self.n_cols, v.len())?;
        let mut out = vec![0.0; self.n_rows];
        exec.fill_indexed(&mut out, |r, o| *o = self.row_dot(r, v));
        Ok(out)
    }

    /// `mᵀ * v` without forming the transpose.
    pub fn matvec_transpose(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut out = vec![0.0; self.n_cols];
        self.matvec_transpose_into(v, &mut out)?;
        Ok(out)
    }

    /// `out = mᵀ * v`.
    pub fn matvec_transpose_into(&self, v: &[f64], out: &mut [f64]) -> Result<(), LinalgError> {
        self.check_len("matvec_transpose (input)", self.n_rows, v.len())?;
        self.check_len("matvec_transpose (output)", self.n_cols, out.len())?;
        out.iter_mut().for_each(|o| *o = 0.0);
        for (r, &vr) in v.iter().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &a) in cols.iter().zip(vals) {
                out[c] += a * vr;
            }
        }
        Ok(())
    }

    /// `[top; bottom]`.
    pub fn vstack(top: &CsrMatrix, bottom: &CsrMatrix) -> Result<CsrMatrix, LinalgError> {
        if top.n_cols != bottom.n_cols {
            return Err(LinalgError::DimensionMismatch {
                op: "vstack (columns)",
                expected: top.n_cols,
                found: bottom.n_cols,
            });
        }
        let offset = top.nnz();
        let mut row_offsets = top.row_offsets.clone();
        row_offsets.extend(bottom.row_offsets[1..].iter().map(|o| o + offset));
        let mut col_indices = top.col_indices.clone();
        col_indices.extend_from_slice(&bottom.col_indices);
        let mut values = top.values.clone();
        values.extend_from_slice(&bottom.values);
        Ok(CsrMatrix {
            n_rows: top.n_rows + bottom.n_rows,
            n_cols: top.n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// True when the matrix is exactly `-I`.
    pub fn is_negative_identity(&self) -> bool {
        self.n_rows == self.n_cols
            && self.nnz() == self.n_rows
            && (0..self.n_rows).all(|r| {
                let (cols, vals) = self.row(r);
                cols == [r] && vals == [-1.0]
            })
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dense(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> Vec<Vec<f64>> {
        (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| {
                        if rng.random::<f64>() < density {
                            rng.random_range(-2.0..2.0)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn dense_matvec(d: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
        d.iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn dense_transpose(d: &[Vec<f64>], cols: usize) -> Vec<Vec<f64>> {
        (0..cols).map(|c| d.iter().map(|row| row[c]).collect()).collect()
    }

    #[test]
    fn identity_and_zero_products() {
        let i3 = CsrMatrix::identity(3);
        assert_eq!(i3.matvec(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(i3.matvec_transpose(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let z = CsrMatrix::zeros(2, 3);
        assert_eq!(z.matvec(&[4.0, -1.0, 7.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn one_row_transpose() {
        let m = CsrMatrix::from_dense(&[vec![1.0, -1.0, 0.0]], 3).unwrap();
        assert_eq!(m.matvec_transpose(&[2.0]).unwrap(), vec![2.0, -2.0, 0.0]);
    }

    #[test]
    fn matvec_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = random_dense(&mut rng, 5, 4, 0.4);
        let m = CsrMatrix::from_dense(&d, 4).unwrap();
        let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let got = m.matvec(&v).unwrap();
        for (g, e) in got.iter().zip(dense_matvec(&d, &v)) {
            assert!((g - e).abs() <= 1e-14);
        }
        assert_eq!(m.matvec_with(Exec::Parallel, &v).unwrap(), got);
    }

    #[test]
    fn transpose_matches_explicit_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let d = random_dense(&mut rng, 6, 3, 0.5);
        let m = CsrMatrix::from_dense(&d, 3).unwrap();
        let v: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let expected = dense_matvec(&dense_transpose(&d, 3), &v);
        for (g, e) in m.matvec_transpose(&v).unwrap().iter().zip(expected) {
            assert!((g - e).abs() <= 1e-14);
        }
    }

    #[test]
    fn dimension_mismatch_names_both_sizes() {
        let err = CsrMatrix::identity(3).matvec(&[1.0, 2.0]).unwrap_err();
        assert_eq!(
            err,
            LinalgError::DimensionMismatch {
                op: "matvec (input)",
                expected: 3,
                found: 2
            }
        );
        assert!(err.to_string().contains('3') && err.to_string().contains('2'));
        assert!(CsrMatrix::identity(3).matvec_transpose(&[1.0]).is_err());
    }

    #[test]
    fn vstack_cases() {
        let g = CsrMatrix::from_dense(&[vec![1.0, -1.0, 0.0]], 3).unwrap();
        let a = CsrMatrix::vstack(&g, &CsrMatrix::identity(3)).unwrap();
        assert_eq!(
            a.to_dense(),
            vec![
                vec![1.0, -1.0, 0.0],
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0]
            ]
        );
        let empty = CsrMatrix::zeros(0, 4);
        assert_eq!(
            CsrMatrix::vstack(&empty, &CsrMatrix::identity(4)).unwrap(),
            CsrMatrix::identity(4)
        );
        assert!(CsrMatrix::vstack(&g, &CsrMatrix::identity(2)).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let d1 = random_dense(&mut rng, 3, 5, 0.5);
        let d2 = random_dense(&mut rng, 4, 5, 0.5);
        let s = CsrMatrix::vstack(
            &CsrMatrix::from_dense(&d1, 5).unwrap(),
            &CsrMatrix::from_dense(&d2, 5).unwrap(),
        )
        .unwrap();
        let mut cat = d1.clone();
        cat.extend(d2);
        assert_eq!(s.to_dense(), cat);
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, 2, &[(1, 1, 2.0), (0, 0, 1.0), (1, 1, 3.0)]).unwrap();
        assert_eq!(m.to_dense(), vec![vec![1.0, 0.0], vec![0.0, 5.0]]);
        assert!(CsrMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn raw_validation() {
        assert!(CsrMatrix::from_raw(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::from_raw(1, 3, vec![0, 1], vec![3], vec![1.0]).is_err());
        assert!(CsrMatrix::from_raw(2, 3, vec![0, 1], vec![0], vec![1.0]).is_err());
        assert!(CsrMatrix::from_raw(1, 3, vec![0, 2], vec![0, 2], vec![1.0, 1.0]).is_ok());
    }

    #[test]
    fn negative_identity_detection() {
        assert!(CsrMatrix::scaled_identity(4, -1.0).is_negative_identity());
        assert!(!CsrMatrix::identity(4).is_negative_identity());
    }
}
