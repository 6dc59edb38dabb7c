#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use recykl::linalg::{DenseMatrix, SparseSpdMatrix};
use recykl::problems::Xorshift64Star;

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.rows(), m.cols(), m.data())
}

pub fn from_na(m: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_col_major(m.nrows(), m.ncols(), m.as_slice().to_vec()).unwrap()
}

pub fn sparse_to_na(a: &SparseSpdMatrix) -> DMatrix<f64> {
    to_na(&a.to_dense())
}

pub fn vec_na(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut Xorshift64Star) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.normal())
}

/// Orthonormal `n × n` matrix from the QR factor of a Gaussian matrix.
pub fn random_orthogonal(n: usize, rng: &mut Xorshift64Star) -> DMatrix<f64> {
    gaussian(n, n, rng).qr().q()
}

/// `Q diag(λ) Qᵀ` with `λ` log-uniform in `[1, cond]`.
pub fn random_spd(n: usize, cond: f64, rng: &mut Xorshift64Star) -> DMatrix<f64> {
    let q = random_orthogonal(n, rng);
    let lam = DVector::from_fn(n, |i, _| {
        if n == 1 {
            1.0
        } else {
            cond.powf(i as f64 / (n - 1) as f64)
        }
    });
    let mut a = &q * DMatrix::from_diagonal(&lam) * q.transpose();
    a = (&a + a.transpose()) * 0.5;
    a
}

pub fn spd_sparse(a: &DMatrix<f64>) -> SparseSpdMatrix {
    SparseSpdMatrix::from_dense(&from_na(a)).unwrap()
}

/// Orthonormal basis of the span of `cols`, dropping numerically dependent columns.
pub fn orth_basis(cols: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = cols.nrows();
    let mut out: Vec<DVector<f64>> = Vec::new();
    for j in 0..cols.ncols() {
        let mut c = cols.column(j).into_owned();
        let scale = c.norm();
        for _ in 0..2 {
            for q in &out {
                let h = q.dot(&c);
                c -= q * h;
            }
        }
        if c.norm() > tol * scale.max(f64::MIN_POSITIVE) {
            let nc = c.norm();
            out.push(c / nc);
        }
    }
    if out.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&out)
}

/// `x₀ + B (BᵀAB)⁻¹ Bᵀ (b − A x₀)`: the energy-optimal point of `x₀ + range(B)`.
pub fn energy_projection(a: &DMatrix<f64>, b: &DVector<f64>, x0: &DVector<f64>, basis: &DMatrix<f64>) -> DVector<f64> {
    if basis.ncols() == 0 {
        return x0.clone();
    }
    let r0 = b - a * x0;
    let g = basis.transpose() * a * basis;
    let c = g.cholesky().expect("reduced matrix SPD").solve(&(basis.transpose() * r0));
    x0 + basis * c
}

pub fn a_norm(a: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(a * v)).max(0.0).sqrt()
}

/// Largest sine of the principal angles between two column spans.
pub fn subspace_distance(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let qu = orth_basis(u, 1e-12);
    let qv = orth_basis(v, 1e-12);
    let r = &qu - &qv * (qv.transpose() * &qu);
    r.singular_values().max().clamp(0.0, 1.0)
}

pub mod checks;
