use crate::error::{check_dim, Error, Result};

use super::dense::{dot, DenseMatrix};
use super::instr::Instrumentation;

/// Relative tolerance for the numerical symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric positive-definite matrix in CSR layout with both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSpdMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSpdMatrix {
    /// Validates CSR arrays: sorted unique columns per row, symmetry, positive diagonal.
    pub fn from_csr(
        n: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_dim(n + 1, row_offsets.len())?;
        check_dim(col_indices.len(), values.len())?;
        check_dim(*row_offsets.last().unwrap_or(&0), values.len())?;
        for i in 0..n {
            let (s, e) = (row_offsets[i], row_offsets[i + 1]);
            if s > e {
                return Err(Error::Config(format!("row offsets decrease at row {i}")));
            }
            for k in s..e {
                if col_indices[k] >= n {
                    return Err(Error::DimensionMismatch { expected: n, got: col_indices[k] + 1 });
                }
                if k > s && col_indices[k] <= col_indices[k - 1] {
                    return Err(Error::Config(format!("unsorted or duplicate column in row {i}")));
                }
            }
        }
        let m = Self { n, row_offsets, col_indices, values };
        m.validate()?;
        Ok(m)
    }

    /// Builds from `(row, col, value)` entries covering both triangles; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch { expected: n, got: i.max(j) + 1 });
            }
            rows[i].push((j, v));
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            for (j, v) in r {
                if col_indices.len() > *row_offsets.last().unwrap() && *col_indices.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_indices.push(j);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Self::from_csr(n, row_offsets, col_indices, values)
    }

    /// Builds from lower-triangle entries `(i, j, v)` with `i >= j`, mirroring off-diagonals.
    pub fn from_lower_triplets(n: usize, lower: &[(usize, usize, f64)]) -> Result<Self> {
        let mut full = Vec::with_capacity(2 * lower.len());
        for &(i, j, v) in lower {
            if i < j {
                return Err(Error::Config(format!("entry ({i}, {j}) is above the diagonal")));
            }
            full.push((i, j, v));
            if i != j {
                full.push((j, i, v));
            }
        }
        Self::from_triplets(n, &full)
    }

    /// Sparse copy of a dense symmetric matrix, dropping exact zeros.
    pub fn from_dense(a: &DenseMatrix) -> Result<Self> {
        check_dim(a.rows(), a.cols())?;
        let mut t = Vec::new();
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                let v = a.get(i, j);
                if v != 0.0 || i == j {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(a.rows(), &t)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n]).expect("identity is SPD")
    }

    pub fn from_diag(d: &[f64]) -> Result<Self> {
        let t: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(d.len(), &t)
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.n {
            match self.entry(i, i) {
                Some(d) if d > 0.0 => {}
                _ => return Err(Error::NotPositiveDefinite { pivot: i }),
            }
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[k];
                if j <= i {
                    continue;
                }
                let v = self.values[k];
                let w = self.entry(j, i).unwrap_or(0.0);
                if (v - w).abs() > SYMMETRY_TOL * v.abs().max(w.abs()) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
            // lower entries without an upper partner
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[k];
                if j < i && self.values[k] != 0.0 && self.entry(j, i).is_none() {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
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

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[s..e], &self.values[s..e])
    }

    pub fn entry(&self, i: usize, j: usize) -> Option<f64> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|k| vals[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.entry(i, i).unwrap_or(0.0)).collect()
    }

    /// `A x`, recording one matvec on `sink`.
    pub fn spmv(&self, x: &[f64], sink: &Instrumentation) -> Result<Vec<f64>> {
        check_dim(self.n, x.len())?;
        sink.record_matvec();
        Ok(self.apply_uncounted(x))
    }

    pub(crate) fn apply_uncounted(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
            })
            .collect()
    }

    /// `xᵀ A y` (counts one matvec).
    pub fn weighted_inner(&self, x: &[f64], y: &[f64], sink: &Instrumentation) -> Result<f64> {
        check_dim(self.n, x.len())?;
        let ay = self.spmv(y, sink)?;
        Ok(dot(x, &ay))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d.set(i, j, v);
            }
        }
        d
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖self − other‖_F` over the union of both sparsity patterns.
    pub fn frobenius_distance(&self, other: &SparseSpdMatrix) -> Result<f64> {
        check_dim(self.n, other.n)?;
        let mut acc = 0.0;
        for i in 0..self.n {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let d = if q == cb.len() || (p < ca.len() && ca[p] < cb[q]) {
                    p += 1;
                    va[p - 1]
                } else if p == ca.len() || cb[q] < ca[p] {
                    q += 1;
                    -vb[q - 1]
                } else {
                    p += 1;
                    q += 1;
                    va[p - 1] - vb[q - 1]
                };
                acc += d * d;
            }
        }
        Ok(acc.sqrt())
    }
}
