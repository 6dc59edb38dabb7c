//! Method presets and the comparison protocols built on [`run_sequence`]:
//! tolerance sweeps, the weight-scheme study and output-error tracking.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::{pcg, PcgOptions};
use crate::linalg::{norm2, sub, Counts, Instrumentation};
use crate::precond::Preconditioner;
use crate::problems::SystemSequence;
use crate::threestage::{
    run_sequence, run_sequence_observed, solve_system, FactorRule, RecycleState, RunOptions,
    SequenceRun, SolveContext, SolveReport, Stage, ThreeStageConfig, TolerancePolicy,
};
use crate::truncation::{images, pod_compress_with_images, CompressionMetric, Strategy, TruncationConfig};
use crate::weights::{weights_ideal, weights_previous, weights_rbf, WeightKind};

/// Forcing tolerances of the sweep.
pub const TOL_SWEEP: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: String,
    pub config: ThreeStageConfig,
}

impl MethodSpec {
    pub fn new(name: impl Into<String>, config: ThreeStageConfig) -> Self {
        Self { name: name.into(), config }
    }
}

/// Rejects duplicate names and invalid configurations.
pub fn validate_methods(methods: &[MethodSpec]) -> Result<()> {
    for (i, m) in methods.iter().enumerate() {
        if methods[..i].iter().any(|o| o.name == m.name) {
            return Err(Error::Config(format!("duplicate method name `{}`", m.name)));
        }
        m.config.validate().map_err(|e| Error::Config(format!("method `{}`: {e}", m.name)))?;
    }
    Ok(())
}

fn truncating(strategy: Strategy, cap: usize, w: usize, retained: usize) -> TruncationConfig {
    TruncationConfig {
        strategy,
        storage_cap: Some(cap),
        max_retained: Some(retained),
        max_stage1: Some(w),
        ..TruncationConfig::default()
    }
}

/// The comparison set at storage cap `cap`: plain PCG, recycling without
/// truncation, deflation and POD with a full stage-1 basis, and the three
/// inner-iterative POD variants with a narrow stage-1 basis.
pub fn standard_methods(cap: usize) -> Vec<MethodSpec> {
    let keep = (cap / 2).max(1);
    let narrow = keep.min(5);
    let pod = Strategy::PodAprevRbf;
    let mut out = vec![MethodSpec::new("PCG", ThreeStageConfig::pcg())];
    out.push(MethodSpec::new(
        "No truncation",
        ThreeStageConfig {
            truncation: TruncationConfig {
                strategy: Strategy::None,
                storage_cap: None,
                ..TruncationConfig::default()
            },
            ..ThreeStageConfig::default()
        },
    ));
    out.push(MethodSpec::new(
        format!("DF({keep},0)"),
        ThreeStageConfig {
            truncation: truncating(Strategy::Deflation(keep), cap, keep, keep),
            ..ThreeStageConfig::default()
        },
    ));
    out.push(MethodSpec::new(
        format!("POD({keep},0)"),
        ThreeStageConfig { truncation: truncating(pod, cap, keep, keep), ..ThreeStageConfig::default() },
    ));
    let it = |rho: f64, stage2: FactorRule, inner: FactorRule| ThreeStageConfig {
        truncation: TruncationConfig {
            stage1_threshold: rho,
            full_orth: true,
            ..truncating(pod, cap, narrow, keep)
        },
        tolerances: TolerancePolicy { stage2, inner },
        ..ThreeStageConfig::default()
    };
    let rest = keep - narrow;
    out.push(MethodSpec::new(
        format!("POD({narrow},{rest})it stg1"),
        it(
            1.0,
            FactorRule { factor: 1e-4, below: Some((1e-3, 1e-5)) },
            FactorRule::constant(1e-2),
        ),
    ));
    out.push(MethodSpec::new(
        format!("POD({narrow},{rest})it mixed"),
        it(
            1e-3,
            FactorRule { factor: 1e-4, below: Some((1e-2, 1e-6)) },
            FactorRule::constant(1e-2),
        ),
    ));
    out.push(MethodSpec::new(
        format!("POD({narrow},{rest})it stg2"),
        it(
            0.0,
            FactorRule { factor: 1e-4, below: Some((1e-2, 1e-7)) },
            FactorRule { factor: 1e-2, below: Some((1e-3, 1e-3)) },
        ),
    ));
    out
}

/// Energy-metric and output-metric POD with the same budget.
pub fn output_methods(cap: usize) -> Vec<MethodSpec> {
    let keep = (cap / 2).max(1);
    [("POD-A", Strategy::PodAprevRbf), ("POD-CtC", Strategy::PodCtCRbf)]
        .into_iter()
        .map(|(name, s)| {
            MethodSpec::new(
                format!("{name}({keep},0)"),
                ThreeStageConfig { truncation: truncating(s, cap, keep, keep), ..ThreeStageConfig::default() },
            )
        })
        .collect()
}

/// Averages over the systems of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub tol: f64,
    pub systems: usize,
    pub avg_matvecs: f64,
    pub avg_precond_apps: f64,
    pub avg_wall_ms: f64,
    pub avg_stage3_iters: f64,
    pub total_stage3_iters: usize,
    pub not_converged: usize,
}

pub fn summarize(method: &str, tol: f64, reports: &[SolveReport]) -> MethodSummary {
    let p = reports.len().max(1) as f64;
    MethodSummary {
        method: method.to_string(),
        tol,
        systems: reports.len(),
        avg_matvecs: reports.iter().map(|r| r.matvecs as f64).sum::<f64>() / p,
        avg_precond_apps: reports.iter().map(|r| r.precond_apps as f64).sum::<f64>() / p,
        avg_wall_ms: reports.iter().map(|r| r.wall_ms).sum::<f64>() / p,
        avg_stage3_iters: reports.iter().map(|r| r.stage3_iters as f64).sum::<f64>() / p,
        total_stage3_iters: reports.iter().map(|r| r.stage3_iters).sum(),
        not_converged: reports.iter().filter(|r| !r.converged).count(),
    }
}

/// Runs `spec` on `seq`, continuing past systems that fail to converge.
pub fn run_method(seq: &SystemSequence, spec: &MethodSpec, opts: &RunOptions) -> Result<SequenceRun> {
    run_sequence(seq, &spec.config, &RunOptions { continue_on_failure: true, ..*opts })
}

/// Solutions of every system to near machine precision, for error measurements.
pub fn reference_solutions(seq: &SystemSequence) -> Result<Vec<Vec<f64>>> {
    seq.systems()
        .iter()
        .map(|s| {
            let m = Preconditioner::build(crate::precond::PrecondKind::Ssor(1.0), &s.a)?;
            let tol = 1e-13 * norm2(&s.b).max(f64::MIN_POSITIVE);
            let opts = PcgOptions::new(tol).with_max_iter(10 * s.a.n());
            Ok(pcg(&s.a, &s.b, &s.xguess, &m, &opts, &Instrumentation::new())?.x)
        })
        .collect()
}

/// Cost of reaching `‖C(x* − x)‖ ≤ τ`, averaged over systems.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputErrorRow {
    pub method: String,
    pub tau: f64,
    pub avg_matvecs: f64,
    pub avg_precond_apps: f64,
    pub avg_wall_ms: f64,
    /// Systems whose final iterate never met the threshold.
    pub unmet: usize,
}

/// Tracks the output error of every iterate of `spec` and records, per threshold,
/// the counters at the first iterate meeting it.
pub fn output_error_run(
    seq: &SystemSequence,
    spec: &MethodSpec,
    taus: &[f64],
    xstar: &[Vec<f64>],
) -> Result<Vec<OutputErrorRow>> {
    let c = seq
        .output
        .as_ref()
        .ok_or_else(|| Error::Config("output-error tracking requires an output matrix".into()))?;
    if xstar.len() != seq.len() {
        return Err(Error::DimensionMismatch { expected: seq.len(), got: xstar.len() });
    }
    let cx: Vec<Vec<f64>> = xstar.iter().map(|x| c.matvec(x)).collect();
    // hits[j][t] = (counts, ms) at the first iterate meeting taus[t]
    let mut hits: Vec<Vec<Option<(Counts, f64)>>> = vec![vec![None; taus.len()]; seq.len()];
    let mut last: Vec<(Counts, f64)> = vec![(Counts::default(), 0.0); seq.len()];
    let mut clock: Option<(usize, Instant)> = None;
    let mut observe = |j: usize, stage: Stage, x: &[f64], counts: Counts| {
        if stage == Stage::Start || clock.is_none_or(|(cj, _)| cj != j) {
            clock = Some((j, Instant::now()));
        }
        let ms = clock.unwrap().1.elapsed().as_secs_f64() * 1e3;
        let err = norm2(&sub(&cx[j - 1], &c.matvec(x)));
        for (t, &tau) in taus.iter().enumerate() {
            if hits[j - 1][t].is_none() && err <= tau {
                hits[j - 1][t] = Some((counts, ms));
            }
        }
        last[j - 1] = (counts, ms);
    };
    let run = run_sequence_observed(
        seq,
        &spec.config,
        &RunOptions { continue_on_failure: true, ..Default::default() },
        Some(&mut observe),
    )?;
    let p = seq.len() as f64;
    Ok(taus
        .iter()
        .enumerate()
        .map(|(t, &tau)| {
            let mut row = OutputErrorRow {
                method: spec.name.clone(),
                tau,
                avg_matvecs: 0.0,
                avg_precond_apps: 0.0,
                avg_wall_ms: 0.0,
                unmet: 0,
            };
            for j in 0..seq.len() {
                let (counts, ms) = match hits[j][t] {
                    Some(h) => h,
                    None => {
                        row.unmet += 1;
                        let r = &run.reports[j];
                        (Counts { matvecs: r.matvecs, precond_apps: r.precond_apps, ..last[j].0 }, r.wall_ms)
                    }
                };
                row.avg_matvecs += counts.matvecs as f64 / p;
                row.avg_precond_apps += counts.precond_apps as f64 / p;
                row.avg_wall_ms += ms / p;
            }
            row
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightStudyRow {
    pub scheme: WeightKind,
    /// Retained dimension.
    pub k: usize,
    /// `‖b − A x‖` after the direct solve over the truncated basis.
    pub post_stage2_residual: f64,
    pub stage3_iters: usize,
    /// Dimension actually kept; below `k` when weights vanish on some modes.
    pub retained: usize,
    /// Dimension of the untruncated basis.
    pub z_dim: usize,
}

/// Solves systems `1..=train` without truncation, truncates the accumulated basis
/// once per weight scheme and retained dimension, and solves system `train + 1`
/// with the truncated basis as a full stage-1 basis. Compression uses the energy
/// metric of system `train` for every scheme.
pub fn weight_study(
    seq: &SystemSequence,
    base: &ThreeStageConfig,
    train: usize,
    dims: &[usize],
) -> Result<Vec<WeightStudyRow>> {
    if seq.len() <= train || train == 0 {
        return Err(Error::Config(format!(
            "weight study needs more than {train} systems, sequence has {}",
            seq.len()
        )));
    }
    let mut cfg = base.clone();
    cfg.recycle = true;
    cfg.truncation = TruncationConfig {
        strategy: Strategy::None,
        storage_cap: None,
        stage1_threshold: 1.0,
        full_orth: false,
        ..TruncationConfig::default()
    };
    let trained = run_sequence(&seq.truncated(train), &cfg, &RunOptions::default())?;
    let z = crate::linalg::DenseBasis::new(trained.state.y.clone());
    let history = &trained.state.history;
    let (prev_sys, eval) = (seq.system(train), seq.system(train + 1));
    let scratch = Instrumentation::new();
    let az_prev = images(&prev_sys.a, &z.columns, &scratch)?;
    let schemes = [
        (WeightKind::Ideal, weights_ideal(&z, &eval.a, &eval.b, &eval.xguess, &scratch)?),
        (WeightKind::Prev, weights_previous(history)?),
        (WeightKind::Rbf, weights_rbf(history, history.len())?),
    ];
    let mut rows = Vec::new();
    for &k in dims {
        for (scheme, eta) in &schemes {
            let tc = TruncationConfig {
                strategy: Strategy::PodAprevPrev,
                storage_cap: None,
                max_retained: Some(k),
                ..TruncationConfig::default()
            };
            let y = if k >= z.m() {
                z.columns.clone()
            } else {
                pod_compress_with_images(&z, &az_prev, eta, CompressionMetric::AMetric, &tc)?.y_new.columns
            };
            let retained = y.cols();
            let mut state = RecycleState::new(seq.n());
            state.w_idx = (0..retained).collect();
            state.y = y;
            let tol = cfg.tolerances.resolve(eval.tol);
            let ctx = SolveContext { j: train + 1, ..Default::default() };
            let outcome = match solve_system(&eval.a, &eval.b, &eval.xguess, &tol, &mut state, &cfg, &ctx, None) {
                Ok(o) => o,
                Err(Error::NotConverged { partial: crate::error::Partial::System(o), .. }) => *o,
                Err(e) => return Err(e),
            };
            rows.push(WeightStudyRow {
                scheme: *scheme,
                k,
                post_stage2_residual: outcome.report.post_stage2_residual,
                stage3_iters: outcome.report.stage3_iters,
                retained,
                z_dim: z.m(),
            });
        }
    }
    Ok(rows)
}
