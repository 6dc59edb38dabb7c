use crate::error::{check_dim, Error, Result};

use super::cholesky::dense_cholesky;
use super::dense::{dot, norm2, DenseMatrix};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in descending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct Evd {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

/// Thin SVD `B = U diag(sigma) Vᵀ` with `sigma` nonincreasing.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn symmetric_evd(g: &DenseMatrix) -> Result<Evd> {
    check_dim(g.rows(), g.cols())?;
    let m = g.rows();
    let mut a = g.clone();
    a.symmetrize();
    let mut v = DenseMatrix::identity(m);
    let mut converged = m < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a.get(p, p), a.get(q, q));
                if apq.abs() <= f64::EPSILON * (app.abs() * aqq.abs()).sqrt() {
                    a.set(p, q, 0.0);
                    a.set(q, p, 0.0);
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..m {
                    let (arp, arq) = (a.get(r, p), a.get(r, q));
                    a.set(r, p, c * arp - s * arq);
                    a.set(r, q, s * arp + c * arq);
                }
                for r in 0..m {
                    let (apr, aqr) = (a.get(p, r), a.get(q, r));
                    a.set(p, r, c * apr - s * aqr);
                    a.set(q, r, s * apr + c * aqr);
                }
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for r in 0..m {
                    let (vrp, vrq) = (v.get(r, p), v.get(r, q));
                    v.set(r, p, c * vrp - s * vrq);
                    v.set(r, q, s * vrp + c * vrq);
                }
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::IterationLimit("symmetric_evd"));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| a.get(j, j).total_cmp(&a.get(i, i)).then(i.cmp(&j)));
    Ok(Evd {
        values: order.iter().map(|&i| a.get(i, i)).collect(),
        vectors: v.select_cols(&order),
    })
}

/// One-sided Jacobi on the columns of a tall matrix (`rows >= cols`).
fn one_sided_jacobi(b: &DenseMatrix) -> Result<Svd> {
    let (p, m) = (b.rows(), b.cols());
    let mut u = b.clone();
    let mut v = DenseMatrix::identity(m);
    let mut converged = m < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for i in 0..m {
            for j in i + 1..m {
                let alpha = dot(u.col(i), u.col(i));
                let beta = dot(u.col(j), u.col(j));
                let gamma = dot(u.col(i), u.col(j));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..p {
                    let (ui, uj) = (u.get(r, i), u.get(r, j));
                    u.set(r, i, c * ui - s * uj);
                    u.set(r, j, s * ui + c * uj);
                }
                for r in 0..m {
                    let (vi, vj) = (v.get(r, i), v.get(r, j));
                    v.set(r, i, c * vi - s * vj);
                    v.set(r, j, s * vi + c * vj);
                }
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::IterationLimit("thin_svd"));
    }
    let norms: Vec<f64> = (0..m).map(|j| norm2(u.col(j))).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let sigma: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let smax = sigma.first().copied().unwrap_or(0.0);
    let mut uo = DenseMatrix::zeros(p, m);
    let mut missing = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        if sigma[k] > 0.0 && sigma[k] > 1e-300 * smax.max(1.0) {
            for (dst, src) in uo.col_mut(k).iter_mut().zip(u.col(i)) {
                *dst = src / sigma[k];
            }
        } else {
            missing.push(k);
        }
    }
    complete_orthonormal(&mut uo, &missing);
    Ok(Svd { u: uo, sigma, v: v.select_cols(&order) })
}

/// Fills the listed columns with unit vectors orthogonal to all other columns.
fn complete_orthonormal(u: &mut DenseMatrix, missing: &[usize]) {
    let p = u.rows();
    let mut filled: Vec<bool> = vec![true; u.cols()];
    for &k in missing {
        filled[k] = false;
    }
    let mut e = 0;
    for &k in missing {
        while e < p {
            let mut c = vec![0.0; p];
            c[e] = 1.0;
            e += 1;
            for _ in 0..2 {
                for j in 0..u.cols() {
                    if filled[j] {
                        let h = dot(u.col(j), &c);
                        for (ci, uj) in c.iter_mut().zip(u.col(j)) {
                            *ci -= h * uj;
                        }
                    }
                }
            }
            let nc = norm2(&c);
            if nc > 1e-8 {
                for (dst, ci) in u.col_mut(k).iter_mut().zip(&c) {
                    *dst = ci / nc;
                }
                filled[k] = true;
                break;
            }
        }
    }
}

/// Thin singular value decomposition by one-sided Jacobi.
pub fn thin_svd(b: &DenseMatrix) -> Result<Svd> {
    if b.rows() >= b.cols() {
        one_sided_jacobi(b)
    } else {
        let s = one_sided_jacobi(&b.transpose())?;
        Ok(Svd { u: s.v, sigma: s.sigma, v: s.u })
    }
}

/// Solves `K G = M G Λ` for symmetric `K` and SPD `M`; eigenvectors are
/// `M`-orthonormal and eigenvalues descending.
pub fn generalized_symmetric_evd(k: &DenseMatrix, mmat: &DenseMatrix) -> Result<Evd> {
    check_dim(k.rows(), k.cols())?;
    check_dim(k.rows(), mmat.rows())?;
    check_dim(k.rows(), mmat.cols())?;
    let l = dense_cholesky(mmat)?;
    let m = k.rows();
    // C = L⁻¹ K L⁻ᵀ
    let mut tmp = DenseMatrix::zeros(m, m);
    for j in 0..m {
        let c = l.solve_lower(k.col(j));
        tmp.col_mut(j).copy_from_slice(&c);
    }
    let tmp_t = tmp.transpose();
    let mut c = DenseMatrix::zeros(m, m);
    for j in 0..m {
        let col = l.solve_lower(tmp_t.col(j));
        c.col_mut(j).copy_from_slice(&col);
    }
    c.symmetrize();
    let evd = symmetric_evd(&c)?;
    let mut g = DenseMatrix::zeros(m, m);
    for j in 0..m {
        let col = l.solve_upper(evd.vectors.col(j));
        g.col_mut(j).copy_from_slice(&col);
    }
    Ok(Evd { values: evd.values, vectors: g })
}

/// Largest singular value of a dense matrix.
pub fn spectral_norm(a: &DenseMatrix) -> Result<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(0.0);
    }
    Ok(thin_svd(a)?.sigma[0])
}
