//! Preconditioned conjugate gradients, augmented PCG and the direct reduced solve.
//!
//! Augmented PCG keeps every search direction `A`-orthogonal to a given augmenting
//! basis `Y`, so the final iterate is optimal in the `A`-norm over
//! `x̄ + range(Y) ⊕ K_k`. The reduced Galerkin solves with `YᵀAY` are delegated to an
//! [`Augmentation`] handle, which may factor directly or iterate.

mod augment;
mod operator;

pub use augment::{Augmentation, BlockFactor, DirectAugmentation, FactorBlock};
pub use operator::{LinearOperator, ReducedOperator};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Partial, Result};
use crate::linalg::{
    axpy, dense_cholesky, dot, norm2, DenseBasis, DenseLowerTriangular, DenseMatrix,
    Instrumentation, SparseSpdMatrix,
};
use crate::precond::Preconditioner;

/// How new search directions are made conjugate to their predecessors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrthoMode {
    /// Short CG recurrence.
    Cg,
    /// Explicit `A`-orthogonalization against all previous directions.
    #[default]
    Fom,
    /// Full recurrence with `β_i = (rᵀz)/(r_iᵀz_i)`, kept for comparison only.
    FomLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcgOptions {
    pub tol: f64,
    pub mode: OrthoMode,
    /// Defaults to the operator dimension.
    pub max_iter: Option<usize>,
    /// Measure the tolerance relative to the initial residual norm.
    pub relative: bool,
    /// Return the partial result instead of `NotConverged` at the iteration limit
    /// or `Breakdown`.
    pub allow_partial: bool,
}

impl PcgOptions {
    pub fn new(tol: f64) -> Self {
        Self { tol, mode: OrthoMode::Fom, max_iter: None, relative: false, allow_partial: false }
    }

    pub fn with_mode(mut self, mode: OrthoMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = Some(max_iter);
        self
    }
}

/// Output of (augmented) PCG.
#[derive(Debug, Clone)]
pub struct AugmentedPcgResult {
    pub k: usize,
    /// Step sizes `α⁽⁰⁾..α⁽ᵏ⁻¹⁾`.
    pub vhat: Vec<f64>,
    /// Search directions, with `gram_diag = gamma`.
    pub v: DenseBasis,
    /// `γ⁽ⁱ⁾ = p⁽ⁱ⁾ᵀ A p⁽ⁱ⁾`.
    pub gamma: Vec<f64>,
    /// Operator images `A p⁽ⁱ⁾`.
    pub images: DenseMatrix,
    /// `‖r⁽⁰⁾‖, …, ‖r⁽ᵏ⁾‖`.
    pub residual_history: Vec<f64>,
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub converged: bool,
}

impl AugmentedPcgResult {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&0.0)
    }
}

/// Runs augmented PCG from a given iterate `x0` and its residual `r0 = b − A x0`.
///
/// `observer`, when given, is called as `(k, x)` after every update of the iterate.
#[allow(clippy::too_many_arguments)]
pub fn augmented_pcg_from(
    op: &dyn LinearOperator,
    x0: Vec<f64>,
    r0: Vec<f64>,
    aug: Option<&dyn Augmentation>,
    precond: &Preconditioner<'_>,
    opts: &PcgOptions,
    sink: &Instrumentation,
    mut observer: Option<&mut dyn FnMut(usize, &[f64])>,
) -> Result<AugmentedPcgResult> {
    let n = op.dim();
    check_dim(n, x0.len())?;
    check_dim(n, r0.len())?;
    if !(opts.tol >= 0.0) {
        return Err(Error::Config(format!("negative tolerance {}", opts.tol)));
    }
    let aug = aug.filter(|a| a.dim() > 0);
    let max_iter = opts.max_iter.unwrap_or(n);
    let mut x = x0;
    let mut r = r0;
    let r0norm = norm2(&r);
    let tol = if opts.relative { opts.tol * r0norm } else { opts.tol };

    let mut res = AugmentedPcgResult {
        k: 0,
        vhat: Vec::new(),
        v: DenseBasis::empty(n),
        gamma: Vec::new(),
        images: DenseMatrix::zeros(n, 0),
        residual_history: vec![r0norm],
        x: Vec::new(),
        r: Vec::new(),
        converged: false,
    };
    let mut dirs = DenseMatrix::zeros(n, 0);
    let mut rz_hist: Vec<f64> = Vec::new();

    if r0norm <= tol {
        res.x = x;
        res.r = r;
        res.converged = true;
        return Ok(res);
    }
    if max_iter == 0 {
        return finish_unconverged(res, dirs, x, r, opts);
    }

    let mut z = precond.apply(&r, sink)?;
    let mut rz = dot(&r, &z);
    let mut p = z.clone();
    if let Some(a) = aug {
        let mu = a.project(&z, sink)?;
        axpy(-1.0, &a.expand(&mu), &mut p);
    }

    loop {
        let ap = op.apply(&p, sink)?;
        let pp = dot(&p, &p);
        let gamma = dot(&p, &ap);
        if !(gamma > 1e-14 * pp) || !(rz / gamma).is_finite() {
            if opts.allow_partial {
                return finish_unconverged(res, dirs, x, r, opts);
            }
            return Err(Error::Breakdown { iteration: res.k, gamma });
        }
        let alpha = rz / gamma;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        dirs.push_col(&p)?;
        res.images.push_col(&ap)?;
        res.vhat.push(alpha);
        res.gamma.push(gamma);
        rz_hist.push(rz);
        res.k += 1;
        let rnorm = norm2(&r);
        res.residual_history.push(rnorm);
        if let Some(obs) = observer.as_mut() {
            obs(res.k, &x);
        }
        if rnorm <= tol {
            res.converged = true;
            break;
        }
        if res.k >= max_iter {
            return finish_unconverged(res, dirs, x, r, opts);
        }

        z = precond.apply(&r, sink)?;
        let rz_new = dot(&r, &z);
        match opts.mode {
            OrthoMode::Cg => {
                let beta = rz_new / rz;
                let mut pn = z.clone();
                axpy(beta, &p, &mut pn);
                if let Some(a) = aug {
                    let mu = a.project(&z, sink)?;
                    axpy(-1.0, &a.expand(&mu), &mut pn);
                }
                p = pn;
            }
            OrthoMode::Fom => {
                let mut pn = z.clone();
                if let Some(a) = aug {
                    let mu = a.project(&z, sink)?;
                    axpy(-1.0, &a.expand(&mu), &mut pn);
                }
                for _ in 0..2 {
                    for i in 0..res.k {
                        let beta = -dot(res.images.col(i), &pn) / res.gamma[i];
                        axpy(beta, dirs.col(i), &mut pn);
                    }
                }
                p = pn;
            }
            OrthoMode::FomLiteral => {
                let mut pn = z.clone();
                if let Some(a) = aug {
                    let mu = a.project(&z, sink)?;
                    axpy(-1.0, &a.expand(&mu), &mut pn);
                }
                for i in 0..res.k {
                    axpy(rz_new / rz_hist[i], dirs.col(i), &mut pn);
                }
                p = pn;
            }
        }
        rz = rz_new;
    }
    res.v = DenseBasis { columns: dirs, gram_diag: Some(res.gamma.clone()) };
    res.x = x;
    res.r = r;
    Ok(res)
}

fn finish_unconverged(
    mut res: AugmentedPcgResult,
    dirs: DenseMatrix,
    x: Vec<f64>,
    r: Vec<f64>,
    opts: &PcgOptions,
) -> Result<AugmentedPcgResult> {
    res.v = DenseBasis { columns: dirs, gram_diag: Some(res.gamma.clone()) };
    res.x = x;
    res.r = r;
    if opts.allow_partial {
        return Ok(res);
    }
    Err(Error::NotConverged {
        iterations: res.k,
        residual: res.final_residual(),
        partial: Partial::Krylov(Box::new(res)),
    })
}

/// Augmented PCG for `op x = b` starting from `x0 = Y ŷ₀`.
#[allow(clippy::too_many_arguments)]
pub fn augmented_pcg(
    op: &dyn LinearOperator,
    b: &[f64],
    yhat0: &[f64],
    aug: Option<&dyn Augmentation>,
    precond: &Preconditioner<'_>,
    opts: &PcgOptions,
    sink: &Instrumentation,
) -> Result<AugmentedPcgResult> {
    check_dim(op.dim(), b.len())?;
    let (x0, r0) = match aug {
        Some(a) if a.dim() > 0 => {
            check_dim(a.dim(), yhat0.len())?;
            let x0 = a.expand(yhat0);
            let r0 = if yhat0.iter().all(|&c| c == 0.0) {
                b.to_vec()
            } else {
                let ax = op.apply(&x0, sink)?;
                b.iter().zip(&ax).map(|(u, v)| u - v).collect()
            };
            (x0, r0)
        }
        _ => (vec![0.0; b.len()], b.to_vec()),
    };
    augmented_pcg_from(op, x0, r0, aug, precond, opts, sink, None)
}

/// Standard PCG from `x0`.
pub fn pcg(
    a: &SparseSpdMatrix,
    b: &[f64],
    x0: &[f64],
    precond: &Preconditioner<'_>,
    opts: &PcgOptions,
    sink: &Instrumentation,
) -> Result<AugmentedPcgResult> {
    check_dim(a.n(), b.len())?;
    check_dim(a.n(), x0.len())?;
    let r0 = if x0.iter().all(|&v| v == 0.0) {
        b.to_vec()
    } else {
        let ax = a.spmv(x0, sink)?;
        b.iter().zip(&ax).map(|(u, v)| u - v).collect()
    };
    augmented_pcg_from(a, x0.to_vec(), r0, None, precond, opts, sink, None)
}

/// Result of the direct reduced solve over `W`.
#[derive(Debug, Clone)]
pub struct DirectSolve {
    /// `ŵ = (WᵀAW)⁻¹ Wᵀ b`
    pub what: Vec<f64>,
    /// Factor with `R̂ᵀR̂ = WᵀAW`.
    pub rhat: DenseLowerTriangular,
    /// `A W`
    pub images: DenseMatrix,
}

/// Solves the Galerkin system `WᵀAW ŵ = Wᵀ b` by Cholesky factorization.
pub fn direct_reduced_solve(
    a: &SparseSpdMatrix,
    b: &[f64],
    w: &DenseBasis,
    sink: &Instrumentation,
) -> Result<DirectSolve> {
    check_dim(a.n(), b.len())?;
    check_dim(a.n(), w.n())?;
    let mut images = DenseMatrix::zeros(a.n(), 0);
    for j in 0..w.m() {
        images.push_col(&a.spmv(w.col(j), sink)?)?;
    }
    let mut ahat = w.columns.t_matmul(&images);
    ahat.symmetrize();
    sink.record_reduced_assembly();
    let rhat = dense_cholesky(&ahat)?;
    let bhat = w.columns.t_matvec(b);
    let what = rhat.solve(&bhat);
    Ok(DirectSolve { what, rhat, images })
}
