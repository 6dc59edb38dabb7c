//! Three-stage recycling solver for a sequence of systems.
//!
//! For each system: (1) a direct Galerkin solve over the stage-1 basis `W ⊆ Y`,
//! (2) augmented CG on the implicit reduced operator `YᵀAY` with `W` as augmenting
//! space, (3) augmented PCG in the full space, orthogonalized against either the
//! stage-1/stage-2 directions or (with `full_orth`) all of `Y` through inner solves.
//! The stage-3 directions are then appended to `Y`, which is compressed once it
//! exceeds the storage cap.

mod inner;
mod sequence;
mod solve;

pub use inner::InnerAugmentation;
pub use sequence::{run_sequence, run_sequence_observed, ConditioningRecord, RunOptions, SequenceRun, ConditioningHypotheses};
pub use solve::{solve_system, stage1_threshold_set, update_basis, SolveContext, StageArtifacts, SystemOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::OrthoMode;
use crate::linalg::{Counts, DenseMatrix};
use crate::precond::PrecondKind;
use crate::truncation::TruncationConfig;
use crate::weights::{WeightHistory, WeightKind};

/// Per-system tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTolerances {
    /// Stage-3 residual tolerance `ε_j`.
    pub eps: f64,
    /// Stage-2 reduced-residual tolerance `ε̂_j`.
    pub eps_hat: f64,
    /// Inner-solve tolerance `ε̆_j`.
    pub eps_inner: f64,
}

/// `factor · ε`, or `below.1 · ε` when `ε < below.0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorRule {
    pub factor: f64,
    #[serde(default)]
    pub below: Option<(f64, f64)>,
}

impl FactorRule {
    pub const fn constant(factor: f64) -> Self {
        Self { factor, below: None }
    }

    pub fn apply(&self, eps: f64) -> f64 {
        match self.below {
            Some((threshold, f)) if eps < threshold => f * eps,
            _ => self.factor * eps,
        }
    }
}

/// Maps `ε_j` to the stage-2 and inner tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    pub stage2: FactorRule,
    pub inner: FactorRule,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self { stage2: FactorRule::constant(1e-4), inner: FactorRule::constant(1e-2) }
    }
}

impl TolerancePolicy {
    pub fn exact() -> Self {
        Self { stage2: FactorRule::constant(0.0), inner: FactorRule::constant(0.0) }
    }

    pub fn resolve(&self, eps: f64) -> StageTolerances {
        StageTolerances { eps, eps_hat: self.stage2.apply(eps), eps_inner: self.inner.apply(eps) }
    }
}

/// Complete configuration of one solver method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThreeStageConfig {
    /// When false every system is solved by plain PCG.
    pub recycle: bool,
    pub truncation: TruncationConfig,
    pub tolerances: TolerancePolicy,
    pub precond: PrecondKind,
    pub mode: OrthoMode,
    /// Measure `ε_j` relative to the initial residual.
    pub relative_tol: bool,
    pub max_iter: Option<usize>,
    /// Compute `κ(YᵀAY)` and `‖YᵀAY − I‖` for every system.
    pub diagnostics: bool,
    /// Overrides the weights implied by the truncation strategy.
    pub weights: Option<WeightKind>,
    /// Keep stage bases in the outcome for cross-checking.
    pub keep_artifacts: bool,
}

impl Default for ThreeStageConfig {
    fn default() -> Self {
        Self {
            recycle: true,
            truncation: TruncationConfig::default(),
            tolerances: TolerancePolicy::default(),
            precond: PrecondKind::Ssor(1.0),
            mode: OrthoMode::Fom,
            relative_tol: false,
            max_iter: None,
            diagnostics: false,
            weights: None,
            keep_artifacts: false,
        }
    }
}

impl ThreeStageConfig {
    pub fn validate(&self) -> Result<()> {
        self.truncation.validate()?;
        for r in [self.tolerances.stage2, self.tolerances.inner] {
            if !(r.factor >= 0.0) || r.below.is_some_and(|(t, f)| !(t >= 0.0 && f >= 0.0)) {
                return Err(Error::Config("tolerance factors must be nonnegative".into()));
            }
        }
        Ok(())
    }

    pub fn pcg() -> Self {
        Self { recycle: false, ..Self::default() }
    }
}

/// State carried from one system to the next.
#[derive(Debug, Clone)]
pub struct RecycleState {
    /// Augmenting basis `Y_j`.
    pub y: DenseMatrix,
    /// Columns of `Y` forming the stage-1 basis `W`.
    pub w_idx: Vec<usize>,
    /// Index of the system after which the last truncation happened (0 if none).
    pub last_trunc: usize,
    pub history: WeightHistory,
    /// Number of systems solved so far.
    pub solved: usize,
    /// Whether the most recent truncation left `W = Y`.
    pub w_full_at_trunc: bool,
}

impl RecycleState {
    pub fn new(n: usize) -> Self {
        Self {
            y: DenseMatrix::zeros(n, 0),
            w_idx: Vec::new(),
            last_trunc: 0,
            history: WeightHistory::new(),
            solved: 0,
            w_full_at_trunc: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.y.cols()
    }

    pub fn stage1_width(&self) -> usize {
        self.w_idx.len()
    }
}

/// Per-system counters and diagnostics.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SolveReport {
    pub j: usize,
    pub matvecs: u64,
    pub precond_apps: u64,
    pub stage1_dim: usize,
    pub stage2_iters: usize,
    pub stage3_iters: usize,
    pub inner_iters: usize,
    /// Augmenting dimension at the start of the solve.
    pub y_dim: usize,
    pub wall_ms: f64,
    pub final_residual: f64,
    /// `‖b − A x‖` after stages 1 and 2.
    pub post_stage2_residual: f64,
    pub converged: bool,
    pub truncated: bool,
    /// Reduced-matrix assemblies observed while stage 2 ran.
    pub stage2_assemblies: u64,
    pub residual_history: Vec<f64>,
    pub reduced_cond: Option<f64>,
    /// `‖YᵀAY − I‖₂`
    pub reduced_ortho_error: Option<f64>,
}

/// Points in the solve at which an observer sees the iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Start,
    Stage1,
    Stage2,
    Stage3,
}

/// Callback receiving the current iterate and the counters accumulated in this solve.
pub type Observer<'o> = &'o mut dyn FnMut(Stage, &[f64], Counts);
