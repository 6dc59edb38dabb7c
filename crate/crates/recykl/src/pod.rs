//! Goal-oriented proper orthogonal decomposition.
//!
//! Given snapshots `S`, weights `γ` and a (pseudo)metric `Θ`, the POD basis of dimension
//! `y` minimizes `Σᵢ ‖γᵢsᵢ − P(γᵢsᵢ)‖²_Θ` over `y`-dimensional subspaces. Two routes are
//! provided: the method of snapshots (`pod_evd`, eigendecomposition of
//! `diag(γ) SᵀΘS diag(γ)`) and the factored route (`pod_svd`, SVD of `Θ^{1/2} S diag(γ)`),
//! which also accepts semidefinite `Θ = CᵀC`.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{
    symmetric_evd, thin_svd, DenseBasis, DenseMatrix, Instrumentation, SparseSpdMatrix,
};

/// Relative floor on `σ²` for a mode to be admissible.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub enum PodMetric<'a> {
    ExplicitSpd(&'a SparseSpdMatrix),
    /// `Θ = CᵀC` given by its factor `C`.
    FactorForm(&'a DenseMatrix),
}

/// POD modes expressed as coefficients on the snapshot columns.
#[derive(Debug, Clone)]
pub struct PodModes {
    /// `s × rank`; column `i` is `diag(γ) vᵢ / σᵢ`.
    pub coefficients: DenseMatrix,
    /// Full spectrum `σ₁ ≥ … ≥ σ_s`.
    pub singular_values: Vec<f64>,
    /// Number of admissible modes.
    pub rank: usize,
}

impl PodModes {
    pub fn sigma_sq(&self) -> Vec<f64> {
        self.singular_values.iter().map(|s| s * s).collect()
    }
}

#[derive(Debug, Clone)]
pub struct PodBasisResult {
    /// `y` columns `S diag(γ) vᵢ/σᵢ`.
    pub basis: DenseBasis,
    pub singular_values: Vec<f64>,
    pub y: usize,
    /// `S`-coefficients of the basis (`basis = S · coefficients`).
    pub coefficients: DenseMatrix,
    /// True when modes were dropped because `σᵢ² ≤ 1e-12·σ₁²`.
    pub rank_truncated: bool,
}

/// Smallest `i ∈ [1, rank]` with `Σ_{k≤i} σ_k² / Σ σ² ≥ eps`, or `rank` if none.
pub fn energy_truncation_dim(sigma_sq: &[f64], eps: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Config(format!("energy criterion {eps} outside [0, 1]")));
    }
    let first = sigma_sq.first().copied().unwrap_or(0.0);
    if !(first > 0.0) {
        return Err(Error::EmptyBasis);
    }
    let rank = admissible_rank(sigma_sq);
    let total: f64 = sigma_sq.iter().map(|s| s.max(0.0)).sum();
    let mut cum = 0.0;
    for (i, s) in sigma_sq[..rank].iter().enumerate() {
        cum += s;
        if cum / total >= eps {
            return Ok(i + 1);
        }
    }
    Ok(rank)
}

fn admissible_rank(sigma_sq: &[f64]) -> usize {
    let floor = RANK_TOL * sigma_sq.first().copied().unwrap_or(0.0);
    sigma_sq.iter().take_while(|&&s| s > floor).count()
}

fn check_weights(s: usize, gamma: &[f64]) -> Result<()> {
    check_dim(s, gamma.len())?;
    if s == 0 || gamma.iter().all(|&g| g == 0.0) {
        return Err(Error::EmptyBasis);
    }
    Ok(())
}

/// Modes from the snapshot Gram matrix `G = SᵀΘS`.
pub fn pod_modes_from_gram(gram: &DenseMatrix, gamma: &[f64]) -> Result<PodModes> {
    check_dim(gram.rows(), gram.cols())?;
    check_weights(gram.rows(), gamma)?;
    let mut theta_bar = DenseMatrix::from_fn(gram.rows(), gram.cols(), |i, j| {
        gamma[i] * gram.get(i, j) * gamma[j]
    });
    theta_bar.symmetrize();
    let evd = symmetric_evd(&theta_bar)?;
    let sigma: Vec<f64> = evd.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let sigma_sq: Vec<f64> = sigma.iter().map(|s| s * s).collect();
    if !(sigma_sq[0] > 0.0) {
        return Err(Error::EmptyBasis);
    }
    let rank = admissible_rank(&sigma_sq);
    let coefficients = DenseMatrix::from_fn(gram.rows(), rank, |i, k| {
        gamma[i] * evd.vectors.get(i, k) / sigma[k]
    });
    Ok(PodModes { coefficients, singular_values: sigma, rank })
}

/// Modes from the factored snapshots `F = Θ^{1/2} S`.
pub fn pod_modes_from_factor(factor: &DenseMatrix, gamma: &[f64]) -> Result<PodModes> {
    check_weights(factor.cols(), gamma)?;
    let sbar = factor.scale_cols(gamma);
    let svd = thin_svd(&sbar)?;
    let s = factor.cols();
    let mut sigma = svd.sigma.clone();
    sigma.resize(s, 0.0);
    let sigma_sq: Vec<f64> = sigma.iter().map(|v| v * v).collect();
    if !(sigma_sq[0] > 0.0) {
        return Err(Error::EmptyBasis);
    }
    let rank = admissible_rank(&sigma_sq);
    let coefficients =
        DenseMatrix::from_fn(s, rank, |i, k| gamma[i] * svd.v.get(i, k) / sigma[k]);
    Ok(PodModes { coefficients, singular_values: sigma, rank })
}

fn finish(s: &DenseBasis, modes: PodModes, eps: f64) -> Result<PodBasisResult> {
    let y = energy_truncation_dim(&modes.sigma_sq(), eps)?;
    let coefficients = modes.coefficients.leading_cols(y);
    let basis = DenseBasis::new(s.columns.matmul(&coefficients));
    Ok(PodBasisResult {
        basis,
        rank_truncated: modes.rank < modes.singular_values.len(),
        singular_values: modes.singular_values,
        y,
        coefficients,
    })
}

/// POD by the method of snapshots in an explicit SPD metric.
pub fn pod_evd(
    s: &DenseBasis,
    gamma: &[f64],
    theta: &SparseSpdMatrix,
    eps: f64,
    sink: &Instrumentation,
) -> Result<PodBasisResult> {
    check_dim(theta.n(), s.n())?;
    let mut images = DenseMatrix::zeros(s.n(), 0);
    for j in 0..s.m() {
        images.push_col(&theta.spmv(s.col(j), sink)?)?;
    }
    let mut gram = s.columns.t_matmul(&images);
    gram.symmetrize();
    let modes = pod_modes_from_gram(&gram, gamma)?;
    finish(s, modes, eps)
}

/// POD through the SVD of `C S diag(γ)` for the pseudometric `Θ = CᵀC`.
pub fn pod_svd(s: &DenseBasis, gamma: &[f64], chalf: &DenseMatrix, eps: f64) -> Result<PodBasisResult> {
    check_dim(chalf.cols(), s.n())?;
    let factor = chalf.matmul(&s.columns);
    let modes = pod_modes_from_factor(&factor, gamma)?;
    finish(s, modes, eps)
}

/// Dispatches on the metric kind.
pub fn pod(
    s: &DenseBasis,
    gamma: &[f64],
    metric: PodMetric<'_>,
    eps: f64,
    sink: &Instrumentation,
) -> Result<PodBasisResult> {
    match metric {
        PodMetric::ExplicitSpd(theta) => pod_evd(s, gamma, theta, eps, sink),
        PodMetric::FactorForm(c) => pod_svd(s, gamma, c, eps),
    }
}
