//! Sparse and dense kernels shared by the solvers.

mod angles;
mod cholesky;
mod dense;
mod eigen;
mod instr;
mod lanczos;
mod sparse;

pub use angles::{orthonormalize, principal_angle_distance};
pub use cholesky::{dense_cholesky, DenseLowerTriangular};
pub use dense::{axpy, dot, norm2, scale, sub, DenseBasis, DenseMatrix};
pub use eigen::{
    generalized_symmetric_evd, spectral_norm, symmetric_evd, thin_svd, Evd, Svd,
};
pub use instr::{Counts, Instrumentation};
pub use lanczos::lanczos_norm;
pub use sparse::{SparseSpdMatrix, SYMMETRY_TOL};
