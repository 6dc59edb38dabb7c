use crate::error::{check_dim, Error, Result};

use super::dense::{dot, norm2, DenseBasis, DenseMatrix};
use super::eigen::thin_svd;

const RANK_TOL: f64 = 1e-12;

/// Orthonormal basis for the column span by modified Gram-Schmidt with one
/// reorthogonalization pass. Fails when a column is dependent on its predecessors.
pub fn orthonormalize(a: &DenseMatrix) -> Result<DenseMatrix> {
    let scale = (0..a.cols()).map(|j| norm2(a.col(j))).fold(0.0, f64::max);
    let mut q = DenseMatrix::zeros(a.rows(), 0);
    for j in 0..a.cols() {
        let mut c = a.col(j).to_vec();
        for _ in 0..2 {
            for i in 0..q.cols() {
                let h = dot(q.col(i), &c);
                for (ci, qi) in c.iter_mut().zip(q.col(i)) {
                    *ci -= h * qi;
                }
            }
        }
        let nc = norm2(&c);
        if !(nc > RANK_TOL * scale) {
            return Err(Error::RankDeficient);
        }
        c.iter_mut().for_each(|v| *v /= nc);
        q.push_col(&c)?;
    }
    Ok(q)
}

/// `sin θ_max` between `range(U)` and `range(V)`, i.e. `max_{u∈U,‖u‖=1} min_{v∈V} ‖u − v‖`.
///
/// Computed as the largest singular value of `(I − Q_V Q_Vᵀ) Q_U`.
pub fn principal_angle_distance(u: &DenseBasis, v: &DenseBasis) -> Result<f64> {
    check_dim(u.n(), v.n())?;
    if u.m() == 0 {
        return Ok(0.0);
    }
    let qu = orthonormalize(&u.columns)?;
    if v.m() == 0 {
        return Ok(1.0);
    }
    let qv = orthonormalize(&v.columns)?;
    let c = qv.t_matmul(&qu);
    let resid = qu.sub(&qv.matmul(&c));
    let s = thin_svd(&resid)?;
    Ok(s.sigma[0].clamp(0.0, 1.0))
}
