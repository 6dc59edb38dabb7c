//! Dense numerical checks of the error and perturbation bounds behind the
//! truncation strategies. Everything here forms explicit `n × n` projectors and is
//! meant for small instances only.

mod conditioning;
mod subspace;
mod weights_bound;

pub use conditioning::{check_conditioning_bound, conditioning_bound_terms, ROUNDOFF_ALLOWANCE};
pub use subspace::{check_subspace_distance_bound, subspace_instance, Regime, SubspaceInstance};
pub use weights_bound::{
    check_weights_bound, weights_instance, WeightsInstance, WeightsVariant,
};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dense_cholesky, thin_svd, DenseMatrix};
use crate::pod::PodMetric;

/// Relative slack in `lhs ≤ rhs (1 + 1e-8)`.
pub const BOUND_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundCheckReport {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub context: serde_json::Value,
}

impl BoundCheckReport {
    pub fn new(lhs: f64, rhs: f64, context: serde_json::Value) -> Self {
        Self { lhs, rhs, satisfied: lhs <= rhs * (1.0 + BOUND_SLACK), context }
    }
}

/// `min |λ − μ|` over both spectra.
pub fn abssep(l1: &[f64], l2: &[f64]) -> f64 {
    l1.iter()
        .flat_map(|a| l2.iter().map(move |b| (a - b).abs()))
        .fold(f64::INFINITY, f64::min)
}

/// Strong separation `δ_a` between `|Λ₁|` and `|Λ₂|` (nonpositive when the
/// magnitude ranges overlap).
pub fn strong_separation(l1: &[f64], l2: &[f64]) -> f64 {
    let mag = |l: &[f64]| {
        let lo = l.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        let hi = l.iter().map(|v| v.abs()).fold(0.0, f64::max);
        (lo, hi)
    };
    let ((lo1, hi1), (lo2, hi2)) = (mag(l1), mag(l2));
    (lo1 - hi2).max(lo2 - hi1)
}

/// 2-norm condition number `σ_max / σ_min` of a full-column-rank matrix.
pub fn cond(m: &DenseMatrix) -> Result<f64> {
    let s = thin_svd(m)?.sigma;
    let (hi, lo) = (s[0], *s.last().unwrap());
    if !(lo > 0.0) {
        return Err(Error::RankDeficient);
    }
    Ok(hi / lo)
}

/// `Z (ZᵀGZ)⁻¹ ZᵀG` as a dense `n × n` matrix.
pub fn dense_projector(z: &DenseMatrix, g: &DenseMatrix) -> Result<DenseMatrix> {
    check_dim(g.rows(), z.rows())?;
    let gz = g.matmul(z);
    let mut zgz = z.t_matmul(&gz);
    zgz.symmetrize();
    let l = dense_cholesky(&zgz)?;
    // (ZᵀGZ)⁻¹ (GZ)ᵀ
    let gzt = gz.transpose();
    let mut coef = DenseMatrix::zeros(z.cols(), z.rows());
    for j in 0..z.rows() {
        coef.col_mut(j).copy_from_slice(&l.solve(gzt.col(j)));
    }
    Ok(z.matmul(&coef))
}

/// Dense factor `F` with `Θ = FᵀF`.
fn metric_factor(metric: PodMetric<'_>) -> Result<DenseMatrix> {
    match metric {
        PodMetric::ExplicitSpd(a) => Ok(dense_cholesky(&a.to_dense())?.to_dense().transpose()),
        PodMetric::FactorForm(c) => Ok(c.clone()),
    }
}

/// `Σᵢ ‖γᵢsᵢ − P(γᵢsᵢ)‖²_Θ` for the Θ-orthogonal projector onto `range(basis)`;
/// a semidefinite `Θ` uses the pseudoinverse `P = V (FV)⁺ F`.
pub fn pod_objective(
    basis: &DenseMatrix,
    snapshots: &DenseMatrix,
    gamma: &[f64],
    metric: PodMetric<'_>,
) -> Result<f64> {
    check_dim(snapshots.cols(), gamma.len())?;
    check_dim(snapshots.rows(), basis.rows())?;
    let f = metric_factor(metric)?;
    check_dim(f.cols(), snapshots.rows())?;
    let fs = f.matmul(&snapshots.scale_cols(gamma));
    let total: f64 = fs.data().iter().map(|v| v * v).sum();
    if basis.cols() == 0 {
        return Ok(total);
    }
    let svd = thin_svd(&f.matmul(basis))?;
    let floor = svd.sigma[0] * 1e-12 * basis.cols().max(f.rows()) as f64;
    let r = svd.sigma.iter().take_while(|&&s| s > floor).count();
    let q = svd.u.leading_cols(r);
    let captured: f64 = q.t_matmul(&fs).data().iter().map(|v| v * v).sum();
    Ok((total - captured).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseSpdMatrix;

    #[test]
    fn abssep_min_gap() {
        assert_eq!(abssep(&[0.0, 3.0], &[1.0, 2.0]), 1.0);
        assert_eq!(strong_separation(&[5.0, 4.0], &[1.0, 2.0]), 2.0);
        assert!(strong_separation(&[5.0, 1.0], &[2.0]) < 0.0);
    }

    #[test]
    fn objective_extremes() {
        let s = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 2.0], &[0.0, 0.0]]);
        let theta = SparseSpdMatrix::identity(3);
        let m = PodMetric::ExplicitSpd(&theta);
        assert!(pod_objective(&s, &s, &[1.0, 1.0], m).unwrap() < 1e-24);
        let perp = DenseMatrix::from_rows(&[&[0.0], &[0.0], &[1.0]]);
        assert!((pod_objective(&perp, &s, &[1.0, 3.0], m).unwrap() - 37.0).abs() < 1e-12);
    }
}
