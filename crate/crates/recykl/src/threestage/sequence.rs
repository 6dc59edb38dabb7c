use serde::{Deserialize, Serialize};

use crate::error::{Error, Partial, Result};
use crate::linalg::{symmetric_evd, Counts};
use crate::problems::SystemSequence;

use super::solve::reduced_diagnostics;
use super::{solve_system, RecycleState, SolveContext, SolveReport, Stage, ThreeStageConfig};

/// Lanczos steps used for `‖A_j − A_{j−1}‖₂`.
const DIFF_STEPS: usize = 120;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Keep solving after a system fails to converge.
    pub continue_on_failure: bool,
    /// Record the quantities of the conditioning bound before every solve.
    pub trace: bool,
    /// Keep every solution vector.
    pub keep_solutions: bool,
}

/// State of the augmenting basis when system `j` starts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditioningRecord {
    pub j: usize,
    /// Index of the last system after which the basis was truncated.
    pub last_trunc: usize,
    pub y_dim: usize,
    /// `‖Y_j‖₂²`
    pub basis_norm_sq: f64,
    /// `‖A_j − A_{j−1}‖₂` (zero for the first system).
    pub matrix_diff: f64,
    /// `‖Y_jᵀ A_j Y_j − I‖₂`
    pub ortho_error: f64,
    /// `κ(Y_jᵀ A_j Y_j)`
    pub cond: f64,
}

/// Which hypotheses of the conditioning bound a run satisfied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditioningHypotheses {
    /// ϱ = 1 and every truncation left `W = Y`.
    pub full_stage1: bool,
    /// Full orthogonalization with exact stage-2 and inner solves.
    pub exact_full_orth: bool,
    pub truncations: usize,
}

impl ConditioningHypotheses {
    pub fn hypotheses_hold(&self) -> bool {
        self.full_stage1 || self.exact_full_orth
    }
}

#[derive(Debug, Clone)]
pub struct SequenceRun {
    pub reports: Vec<SolveReport>,
    pub solutions: Vec<Vec<f64>>,
    pub trace: Vec<ConditioningRecord>,
    pub flags: ConditioningHypotheses,
    pub state: RecycleState,
}

impl SequenceRun {
    pub fn total_stage3_iters(&self) -> usize {
        self.reports.iter().map(|r| r.stage3_iters).sum()
    }

    pub fn all_converged(&self) -> bool {
        self.reports.iter().all(|r| r.converged)
    }
}

pub fn run_sequence(
    seq: &SystemSequence,
    cfg: &ThreeStageConfig,
    opts: &RunOptions,
) -> Result<SequenceRun> {
    run_sequence_observed(seq, cfg, opts, None)
}

/// Like [`run_sequence`], calling `observer(j, stage, x, counts)` on every iterate.
pub fn run_sequence_observed(
    seq: &SystemSequence,
    cfg: &ThreeStageConfig,
    opts: &RunOptions,
    mut observer: Option<&mut dyn FnMut(usize, Stage, &[f64], Counts)>,
) -> Result<SequenceRun> {
    cfg.validate()?;
    let mut state = RecycleState::new(seq.n());
    let mut reports = Vec::with_capacity(seq.len());
    let mut solutions = Vec::new();
    let mut trace = Vec::new();
    let exact = cfg.tolerances.stage2.factor == 0.0
        && cfg.tolerances.inner.factor == 0.0
        && cfg.tolerances.stage2.below.is_none_or(|b| b.1 == 0.0)
        && cfg.tolerances.inner.below.is_none_or(|b| b.1 == 0.0);
    let mut flags = ConditioningHypotheses {
        full_stage1: cfg.truncation.stage1_threshold >= 1.0,
        exact_full_orth: cfg.truncation.full_orth && exact,
        truncations: 0,
    };
    for (k, sys) in seq.systems().iter().enumerate() {
        let j = k + 1;
        if opts.trace && cfg.recycle {
            trace.push(record(seq, &state, j)?);
        }
        let next = seq.systems().get(j).map(|s| (&*s.a, s.b.as_slice(), s.xguess.as_slice()));
        let ctx = SolveContext { j, output: seq.output.as_ref(), next };
        let tol = cfg.tolerances.resolve(sys.tol);
        let mut fwd;
        let obs: Option<super::Observer<'_>> = match observer.as_mut() {
            Some(o) => {
                fwd = move |s: Stage, x: &[f64], c: Counts| o(j, s, x, c);
                Some(&mut fwd)
            }
            None => None,
        };
        let outcome = match solve_system(&sys.a, &sys.b, &sys.xguess, &tol, &mut state, cfg, &ctx, obs) {
            Ok(o) => o,
            Err(Error::NotConverged { partial: Partial::System(o), iterations, residual }) => {
                if !opts.continue_on_failure {
                    reports.push(o.report);
                    return Err(Error::NotConverged {
                        iterations,
                        residual,
                        partial: Partial::Sequence(reports),
                    });
                }
                *o
            }
            Err(e) => return Err(e),
        };
        if outcome.report.truncated {
            flags.truncations += 1;
            flags.full_stage1 &= state.w_full_at_trunc;
        }
        reports.push(outcome.report);
        if opts.keep_solutions {
            solutions.push(outcome.x);
        }
    }
    Ok(SequenceRun { reports, solutions, trace, flags, state })
}

fn record(seq: &SystemSequence, state: &RecycleState, j: usize) -> Result<ConditioningRecord> {
    let a = &seq.system(j).a;
    let matrix_diff = if j == 1 { 0.0 } else { a.difference_norm(&seq.system(j - 1).a, DIFF_STEPS)? };
    let (basis_norm_sq, ortho_error, cond) = if state.dim() == 0 {
        (0.0, 0.0, 1.0)
    } else {
        let norm_sq = symmetric_evd(&state.y.gram())?.values[0];
        let (cond, ortho) = reduced_diagnostics(a, &state.y)?;
        (norm_sq, ortho, cond)
    };
    Ok(ConditioningRecord {
        j,
        last_trunc: state.last_trunc,
        y_dim: state.dim(),
        basis_norm_sq,
        matrix_diff,
        ortho_error,
        cond,
    })
}
