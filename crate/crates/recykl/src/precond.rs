//! SPD preconditioners: identity, Jacobi and symmetric SOR.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{Instrumentation, SparseSpdMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PrecondKind {
    Identity,
    Jacobi,
    Ssor(f64),
}

impl fmt::Display for PrecondKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecondKind::Identity => write!(f, "identity"),
            PrecondKind::Jacobi => write!(f, "jacobi"),
            PrecondKind::Ssor(w) => write!(f, "ssor:{w}"),
        }
    }
}

impl FromStr for PrecondKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(PrecondKind::Identity),
            "jacobi" => Ok(PrecondKind::Jacobi),
            "ssor" => Ok(PrecondKind::Ssor(1.0)),
            _ => {
                let omega = s
                    .strip_prefix("ssor:")
                    .and_then(|w| w.parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown preconditioner `{s}`")))?;
                if !(omega > 0.0 && omega < 2.0) {
                    return Err(Error::Config(format!("SSOR relaxation {omega} outside (0, 2)")));
                }
                Ok(PrecondKind::Ssor(omega))
            }
        }
    }
}

impl TryFrom<String> for PrecondKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PrecondKind> for String {
    fn from(k: PrecondKind) -> String {
        k.to_string()
    }
}

#[derive(Debug, Clone)]
enum Factors<'a> {
    Identity,
    Jacobi(Vec<f64>),
    Ssor { a: &'a SparseSpdMatrix, diag: Vec<f64>, omega: f64 },
}

/// A preconditioner built for one matrix. SSOR applies
/// `M⁻¹ = (D/ω + U)⁻¹ D (D/ω + L)⁻¹`, i.e. `M = (D/ω + L) D⁻¹ (D/ω + L)ᵀ`.
#[derive(Debug, Clone)]
pub struct Preconditioner<'a> {
    n: usize,
    kind: PrecondKind,
    factors: Factors<'a>,
}

impl<'a> Preconditioner<'a> {
    pub fn build(kind: PrecondKind, a: &'a SparseSpdMatrix) -> Result<Self> {
        let diag = a.diagonal();
        if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::NotPositiveDefinite { pivot: i });
        }
        let factors = match kind {
            PrecondKind::Identity => Factors::Identity,
            PrecondKind::Jacobi => Factors::Jacobi(diag.iter().map(|d| 1.0 / d).collect()),
            PrecondKind::Ssor(omega) => {
                if !(omega > 0.0 && omega < 2.0) {
                    return Err(Error::Config(format!("SSOR relaxation {omega} outside (0, 2)")));
                }
                Factors::Ssor { a, diag, omega }
            }
        };
        Ok(Self { n: a.n(), kind, factors })
    }

    /// Identity operator of size `n`, independent of any matrix.
    pub fn identity(n: usize) -> Preconditioner<'static> {
        Preconditioner { n, kind: PrecondKind::Identity, factors: Factors::Identity }
    }

    pub fn kind(&self) -> PrecondKind {
        self.kind
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.factors, Factors::Identity)
    }

    /// `M⁻¹ r`. Non-identity applications are recorded on `sink`.
    pub fn apply(&self, r: &[f64], sink: &Instrumentation) -> Result<Vec<f64>> {
        check_dim(self.n, r.len())?;
        match &self.factors {
            Factors::Identity => Ok(r.to_vec()),
            Factors::Jacobi(inv) => {
                sink.record_precond();
                Ok(r.iter().zip(inv).map(|(a, b)| a * b).collect())
            }
            Factors::Ssor { a, diag, omega } => {
                sink.record_precond();
                Ok(ssor_apply(a, diag, *omega, r))
            }
        }
    }
}

fn ssor_apply(a: &SparseSpdMatrix, diag: &[f64], omega: f64, r: &[f64]) -> Vec<f64> {
    let n = r.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let mut s = r[i];
        for (&j, &v) in cols.iter().zip(vals) {
            if j >= i {
                break;
            }
            s -= v * y[j];
        }
        y[i] = s * omega / diag[i];
    }
    for i in 0..n {
        y[i] *= diag[i];
    }
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let (cols, vals) = a.row(i);
        let mut s = y[i];
        for (&j, &v) in cols.iter().zip(vals).rev() {
            if j <= i {
                break;
            }
            s -= v * z[j];
        }
        z[i] = s * omega / diag[i];
    }
    z
}
