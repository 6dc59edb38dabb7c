//! Krylov-subspace recycling for sequences of sparse symmetric positive-definite systems.
//!
//! The crate solves `A_j x_j = b_j` for `j = 1..p` with slowly varying `A_j`, reusing
//! search directions from earlier solves. The augmenting subspace is compressed with a
//! goal-oriented proper orthogonal decomposition (or harmonic-Ritz deflation), and each
//! system is solved in three stages: a direct solve over a small high-energy basis, an
//! iterative solve over the whole augmenting subspace, and augmented PCG in the full space.

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod krylov;
pub mod linalg;
pub mod pod;
pub mod precond;
pub mod problems;
pub mod threestage;
pub mod truncation;
pub mod weights;

pub use error::{Error, Result};
