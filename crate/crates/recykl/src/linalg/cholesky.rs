use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

use super::dense::DenseMatrix;

/// Relative pivot floor below which a factorization is declared indefinite.
const PIVOT_TOL: f64 = 1e-14;

/// Lower-triangular factor `L` stored packed by rows, representing `G = L Lᵀ`
/// (equivalently `G = RᵀR` with `R = Lᵀ`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLowerTriangular {
    m: usize,
    entries: Vec<f64>,
}

#[inline]
fn idx(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

/// Cholesky factorization of a symmetric positive-definite matrix.
pub fn dense_cholesky(g: &DenseMatrix) -> Result<DenseLowerTriangular> {
    check_dim(g.rows(), g.cols())?;
    let m = g.rows();
    let mut l = vec![0.0; m * (m + 1) / 2];
    for i in 0..m {
        for j in 0..=i {
            let mut s = g.get(i, j);
            for k in 0..j {
                s -= l[idx(i, k)] * l[idx(j, k)];
            }
            if i == j {
                let floor = PIVOT_TOL * g.get(i, i).abs();
                if !(s > floor) || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite { pivot: i });
                }
                l[idx(i, i)] = s.sqrt();
            } else {
                l[idx(i, j)] = s / l[idx(j, j)];
            }
        }
    }
    Ok(DenseLowerTriangular { m, entries: l })
}

impl DenseLowerTriangular {
    pub fn identity(m: usize) -> Self {
        let mut entries = vec![0.0; m * (m + 1) / 2];
        for i in 0..m {
            entries[idx(i, i)] = 1.0;
        }
        Self { m, entries }
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.entries[idx(i, j)]
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.entries[idx(i, i)]).collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.m, self.m, |i, j| self.get(i, j))
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.m);
        let mut y = b.to_vec();
        for i in 0..self.m {
            let row = &self.entries[idx(i, 0)..idx(i, i)];
            let s: f64 = row.iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / self.entries[idx(i, i)];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.m);
        let mut x = y.to_vec();
        for i in (0..self.m).rev() {
            x[i] /= self.entries[idx(i, i)];
            let xi = x[i];
            for k in 0..i {
                x[k] -= self.entries[idx(i, k)] * xi;
            }
        }
        x
    }

    /// Solves `L Lᵀ x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// Returns `Y L⁻ᵀ` for a column block `Y` with `m` columns.
    pub fn right_solve_transpose(&self, y: &DenseMatrix) -> DenseMatrix {
        // (Y L^{-T})ᵀ = L^{-1} Yᵀ: forward substitution over column indices.
        assert_eq!(y.cols(), self.m);
        let mut out = y.clone();
        for i in 0..self.m {
            let mut c = out.col(i).to_vec();
            for k in 0..i {
                let lik = self.entries[idx(i, k)];
                if lik != 0.0 {
                    let ck = out.col(k);
                    for (a, b) in c.iter_mut().zip(ck) {
                        *a -= lik * b;
                    }
                }
            }
            let d = self.entries[idx(i, i)];
            for a in c.iter_mut() {
                *a /= d;
            }
            out.col_mut(i).copy_from_slice(&c);
        }
        out
    }
}
