//! Sequences of SPD systems: a synthetic diffusion generator, Matrix Market
//! input/output and JSON manifests.

mod diffusion;
mod manifest;
pub mod mm;
mod rng;

pub use diffusion::{gen_diffusion_sequence, gen_output_matrix, DiffusionParams, LoadProfile};
pub use manifest::{load_sequence_manifest, write_sequence, Manifest, ManifestSystem};
pub use rng::{splitmix64, Xorshift64Star};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{DenseMatrix, SparseSpdMatrix};

#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub a: Arc<SparseSpdMatrix>,
    pub b: Vec<f64>,
    /// Initial guess `x̄_j`.
    pub xguess: Vec<f64>,
    /// Residual tolerance `ε_j`.
    pub tol: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SequenceMetadata {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
}

#[derive(Debug, Clone)]
pub struct SystemSequence {
    n: usize,
    systems: Vec<LinearSystem>,
    /// Output matrix `C` (`q × n`).
    pub output: Option<DenseMatrix>,
    pub metadata: SequenceMetadata,
}

impl SystemSequence {
    pub fn new(
        systems: Vec<LinearSystem>,
        output: Option<DenseMatrix>,
        metadata: SequenceMetadata,
    ) -> Result<Self> {
        let first = systems.first().ok_or_else(|| Error::Config("empty system sequence".into()))?;
        let n = first.a.n();
        for s in &systems {
            check_dim(n, s.a.n())?;
            check_dim(n, s.b.len())?;
            check_dim(n, s.xguess.len())?;
            if !(s.tol >= 0.0) {
                return Err(Error::Config(format!("negative tolerance {}", s.tol)));
            }
        }
        if let Some(c) = &output {
            check_dim(n, c.cols())?;
        }
        Ok(Self { n, systems, output, metadata })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }

    pub fn systems(&self) -> &[LinearSystem] {
        &self.systems
    }

    pub fn system(&self, j: usize) -> &LinearSystem {
        &self.systems[j - 1]
    }

    /// Copy with every `ε_j` replaced by `tol`.
    pub fn with_tolerance(&self, tol: f64) -> Self {
        let mut s = self.clone();
        for sys in &mut s.systems {
            sys.tol = tol;
        }
        s
    }

    /// First `p` systems.
    pub fn truncated(&self, p: usize) -> Self {
        let mut s = self.clone();
        s.systems.truncate(p.max(1));
        s
    }

    pub fn with_output(mut self, c: DenseMatrix) -> Result<Self> {
        check_dim(self.n, c.cols())?;
        self.output = Some(c);
        Ok(self)
    }
}
