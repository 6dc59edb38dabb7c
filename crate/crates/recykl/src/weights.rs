//! Snapshot weights for goal-oriented POD: ideal, previous-solution and
//! inverse-distance radial-basis weights.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{
    dense_cholesky, sub, DenseBasis, DenseMatrix, Instrumentation, SparseSpdMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightKind {
    Ideal,
    Prev,
    Rbf,
}

impl FromStr for WeightKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(WeightKind::Ideal),
            "prev" | "previous" => Ok(WeightKind::Prev),
            "rbf" => Ok(WeightKind::Rbf),
            _ => Err(Error::Config(format!("unknown weight scheme `{s}`"))),
        }
    }
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightKind::Ideal => "ideal",
            WeightKind::Prev => "prev",
            WeightKind::Rbf => "rbf",
        })
    }
}

/// Inverse-distance weight `ρ(r) = 2^{-(r-1)}`.
pub fn rho_idw(r: usize) -> f64 {
    assert!(r >= 1, "rho_idw is defined for r >= 1");
    0.5f64.powi(r as i32 - 1)
}

/// Coefficients of past solutions in the accumulated basis, oldest first.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct WeightHistory {
    entries: Vec<(usize, Vec<f64>)>,
}

impl WeightHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `x_j − x̄_j = Z η` for system `j`.
    pub fn push(&mut self, system: usize, eta: Vec<f64>) {
        self.entries.push((system, eta));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn entries(&self) -> &[(usize, Vec<f64>)] {
        &self.entries
    }

    /// Length of the newest entry, which spans the full current basis.
    pub fn current_len(&self) -> usize {
        self.entries.iter().map(|e| e.1.len()).max().unwrap_or(0)
    }

    /// Re-expresses every entry in the coordinates of a compressed basis `Y = Z M`
    /// by `G`-orthogonal projection: `c = (MᵀGM)⁻¹ MᵀG η`.
    pub fn reexpress(&mut self, map: &DenseMatrix, gram: &DenseMatrix) -> Result<()> {
        let z = map.rows();
        check_dim(z, gram.rows())?;
        let gm = gram.matmul(map);
        let mut mgm = map.t_matmul(&gm);
        mgm.symmetrize();
        let l = dense_cholesky(&mgm)?;
        for (_, eta) in self.entries.iter_mut() {
            let mut padded = eta.clone();
            padded.resize(z, 0.0);
            *eta = l.solve(&gm.t_matvec(&padded));
        }
        Ok(())
    }
}

/// `η* = (ZᵀAZ)⁻¹ Zᵀ(b − A x̄)`. Oracle only: requires the current matrix.
pub fn weights_ideal(
    z: &DenseBasis,
    a: &SparseSpdMatrix,
    b: &[f64],
    xguess: &[f64],
    sink: &Instrumentation,
) -> Result<Vec<f64>> {
    check_dim(a.n(), z.n())?;
    check_dim(a.n(), b.len())?;
    let ax = a.spmv(xguess, sink)?;
    let r = sub(b, &ax);
    let mut images = DenseMatrix::zeros(a.n(), 0);
    for j in 0..z.m() {
        images.push_col(&a.spmv(z.col(j), sink)?)?;
    }
    let mut g = z.columns.t_matmul(&images);
    g.symmetrize();
    let l = dense_cholesky(&g)?;
    Ok(l.solve(&z.columns.t_matvec(&r)))
}

/// Coefficients of the most recent solution, zero-padded to the current basis size.
pub fn weights_previous(history: &WeightHistory) -> Result<Vec<f64>> {
    let len = history.current_len();
    let (_, eta) = history.entries.last().ok_or(Error::NoHistory)?;
    let mut out = eta.clone();
    out.resize(len, 0.0);
    Ok(out)
}

/// `Σ_{i=1}^{ω} ρ(i) η_{j+1−i}` over the `ω` most recent entries.
pub fn weights_rbf(history: &WeightHistory, omega: usize) -> Result<Vec<f64>> {
    if history.is_empty() {
        return Err(Error::NoHistory);
    }
    if omega == 0 || omega > history.len() {
        return Err(Error::Config(format!(
            "window {omega} outside [1, {}]",
            history.len()
        )));
    }
    let len = history.current_len();
    let mut out = vec![0.0; len];
    for (i, (_, eta)) in history.entries.iter().rev().take(omega).enumerate() {
        let rho = rho_idw(i + 1);
        for (o, e) in out.iter_mut().zip(eta) {
            *o += rho * e;
        }
    }
    Ok(out)
}
