use std::time::Instant;

use crate::error::{check_dim, Error, Partial, Result};
use crate::krylov::{
    augmented_pcg_from, direct_reduced_solve, AugmentedPcgResult, Augmentation, BlockFactor,
    DirectAugmentation, FactorBlock, PcgOptions, ReducedOperator,
};
use crate::linalg::{
    axpy, norm2, symmetric_evd, DenseBasis, DenseLowerTriangular, DenseMatrix, Instrumentation,
    SparseSpdMatrix,
};
use crate::precond::Preconditioner;
use crate::truncation::{
    deflation_compress_with_images, images, pod_compress_with_images, CompressionMetric,
    Strategy,
};
use crate::weights::{weights_ideal, weights_previous, weights_rbf, WeightKind};

use super::inner::InnerAugmentation;
use super::{Observer, RecycleState, SolveReport, Stage, StageTolerances, ThreeStageConfig};

/// Relative floor on reduced-space tolerances; below it CG iterates on roundoff.
pub const REDUCED_TOL_FLOOR: f64 = 1e-13;

/// Sequence-level data available to a single solve.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolveContext<'c> {
    /// 1-based system index.
    pub j: usize,
    /// Output matrix `C` for the `CᵀC` metric.
    pub output: Option<&'c DenseMatrix>,
    /// Next system `(A, b, x̄)`, consulted only by oracle weights.
    pub next: Option<(&'c SparseSpdMatrix, &'c [f64], &'c [f64])>,
}

/// Bases used by the stages of one solve.
#[derive(Debug, Clone)]
pub struct StageArtifacts {
    pub xbar: Vec<f64>,
    /// Iterate after stages 1 and 2.
    pub stage3_start: Vec<f64>,
    /// Stage-3 augmenting basis: `[W, V̂]`, or `Y` with full orthogonalization.
    pub augmenting: DenseMatrix,
}

#[derive(Debug, Clone)]
pub struct SystemOutcome {
    pub x: Vec<f64>,
    pub report: SolveReport,
    pub artifacts: Option<StageArtifacts>,
}

struct Notifier<'o, 's> {
    obs: Option<Observer<'o>>,
    sink: &'s Instrumentation,
}

impl Notifier<'_, '_> {
    fn active(&self) -> bool {
        self.obs.is_some()
    }

    fn emit(&mut self, stage: Stage, x: &[f64]) {
        if let Some(o) = self.obs.as_mut() {
            o(stage, x, self.sink.snapshot());
        }
    }
}

fn selection(rows: usize, idx: &[usize]) -> DenseMatrix {
    let mut s = DenseMatrix::zeros(rows, idx.len());
    for (k, &i) in idx.iter().enumerate() {
        s.set(i, k, 1.0);
    }
    s
}

/// `(κ(YᵀAY), ‖YᵀAY − I‖₂)` computed densely on a private counter.
pub(crate) fn reduced_diagnostics(a: &SparseSpdMatrix, y: &DenseMatrix) -> Result<(f64, f64)> {
    let scratch = Instrumentation::new();
    let ay = images(a, y, &scratch)?;
    scratch.record_reduced_assembly();
    let mut g = y.t_matmul(&ay);
    g.symmetrize();
    let evd = symmetric_evd(&g)?;
    let (lmax, lmin) = (evd.values[0], *evd.values.last().unwrap());
    let ortho = evd.values.iter().map(|l| (l - 1.0).abs()).fold(0.0, f64::max);
    Ok((lmax / lmin, ortho))
}

/// Indices `i` with `γ_i / Σ γ > ϱ`.
pub fn stage1_threshold_set(gamma: &[f64], rho: f64) -> Vec<usize> {
    let total: f64 = gamma.iter().sum();
    (0..gamma.len()).filter(|&i| gamma[i] / total > rho).collect()
}

/// Solves one system with the three-stage algorithm and updates `state`.
///
/// On `NotConverged` the state is still updated with the partial stage-3 directions
/// and the outcome is attached to the error.
#[allow(clippy::too_many_arguments)]
pub fn solve_system(
    a: &SparseSpdMatrix,
    b: &[f64],
    xguess: &[f64],
    tol: &StageTolerances,
    state: &mut RecycleState,
    cfg: &ThreeStageConfig,
    ctx: &SolveContext<'_>,
    observer: Option<Observer<'_>>,
) -> Result<SystemOutcome> {
    let start = Instant::now();
    let n = a.n();
    check_dim(n, b.len())?;
    check_dim(n, xguess.len())?;
    check_dim(n, state.y.rows())?;
    let sink = Instrumentation::new();
    let mut note = Notifier { obs: observer, sink: &sink };
    let y = state.dim();
    let recycle = cfg.recycle && y > 0;
    let mut report = SolveReport { j: ctx.j, y_dim: if cfg.recycle { y } else { 0 }, ..Default::default() };

    note.emit(Stage::Start, xguess);
    let mut r0 = b.to_vec();
    if xguess.iter().any(|&v| v != 0.0) {
        let ax = a.spmv(xguess, &sink)?;
        axpy(-1.0, &ax, &mut r0);
    }

    if cfg.diagnostics && recycle {
        let (cond, ortho) = reduced_diagnostics(a, &state.y)?;
        report.reduced_cond = Some(cond);
        report.reduced_ortho_error = Some(ortho);
    }
    let precond = Preconditioner::build(cfg.precond, a)?;

    // Stage 1: direct Galerkin solve over W.
    let w_idx = if recycle { state.w_idx.clone() } else { Vec::new() };
    let w = w_idx.len();
    let wmat = state.y.select_cols(&w_idx);
    let mut x1 = xguess.to_vec();
    let mut r1 = r0.clone();
    let mut what = Vec::new();
    let mut rhat: Option<DenseLowerTriangular> = None;
    let mut aw = DenseMatrix::zeros(n, 0);
    if w > 0 {
        let ds = direct_reduced_solve(a, &r0, &DenseBasis::new(wmat.clone()), &sink)?;
        axpy(1.0, &wmat.matvec(&ds.what), &mut x1);
        axpy(-1.0, &ds.images.matvec(&ds.what), &mut r1);
        what = ds.what;
        rhat = Some(ds.rhat);
        aw = ds.images;
        note.emit(Stage::Stage1, &x1);
    }
    report.stage1_dim = w;

    // Stage 2: augmented CG on the implicit reduced operator.
    let mut xhat = vec![0.0; y];
    for (k, &i) in w_idx.iter().enumerate() {
        xhat[i] = what[k];
    }
    let mut x2 = x1;
    let mut r2 = r1.clone();
    let yaw = state.y.t_matmul(&aw);
    let mut stage2: Option<(AugmentedPcgResult, DenseMatrix)> = None;
    if recycle && w < y {
        let red = ReducedOperator::new(a, &state.y)?;
        let aug2 = match &rhat {
            Some(l) => {
                let mut f = BlockFactor::new();
                f.push(FactorBlock::Cholesky(l.clone()));
                Some(DirectAugmentation::from_parts(selection(y, &w_idx), yaw.clone(), f)?)
            }
            None => None,
        };
        let f0 = state.y.t_matvec(&r1);
        let opts2 = PcgOptions {
            tol: tol.eps_hat.max(REDUCED_TOL_FLOOR * norm2(&f0)),
            mode: cfg.mode,
            max_iter: Some(y - w),
            relative: false,
            allow_partial: true,
        };
        let ident = Preconditioner::identity(y);
        let before = sink.snapshot();
        red.start_log();
        let res2 = {
            let active = note.active();
            let ymat = &state.y;
            let mut on_iter = |_: usize, xh: &[f64]| {
                let mut x = xguess.to_vec();
                axpy(1.0, &ymat.matvec(xh), &mut x);
                note.emit(Stage::Stage2, &x);
            };
            augmented_pcg_from(
                &red,
                xhat.clone(),
                f0,
                aug2.as_ref().map(|a| a as &dyn Augmentation),
                &ident,
                &opts2,
                &sink,
                if active { Some(&mut on_iter) } else { None },
            )?
        };
        report.stage2_assemblies = sink.snapshot().reduced_assemblies - before.reduced_assemblies;
        let av_hat = DenseMatrix::from_columns(n, &red.take_log())?;
        check_dim(res2.k, av_hat.cols())?;
        axpy(-1.0, &av_hat.matvec(&res2.vhat), &mut r2);
        xhat = res2.x.clone();
        x2 = xguess.to_vec();
        axpy(1.0, &state.y.matvec(&xhat), &mut x2);
        report.stage2_iters = res2.k;
        stage2 = Some((res2, av_hat));
    }
    report.post_stage2_residual = norm2(&r2);

    // Stage 3: augmented PCG in the full space.
    let opts3 = PcgOptions {
        tol: tol.eps,
        mode: cfg.mode,
        max_iter: cfg.max_iter,
        relative: cfg.relative_tol,
        allow_partial: false,
    };
    let mut factor = BlockFactor::new();
    if let Some(l) = &rhat {
        factor.push(FactorBlock::Cholesky(l.clone()));
    }
    if let Some((res2, _)) = &stage2 {
        factor.push(FactorBlock::Diagonal(res2.gamma.clone()));
    }
    let x_stage3_start = x2.clone();
    let mut augmenting = None;
    let res3 = {
        let active = note.active();
        let mut on_iter = |_: usize, x: &[f64]| note.emit(Stage::Stage3, x);
        let obs3: Option<&mut dyn FnMut(usize, &[f64])> = if active { Some(&mut on_iter) } else { None };
        if !recycle {
            augmented_pcg_from(a, x2, r2, None, &precond, &opts3, &sink, obs3)
        } else if !cfg.truncation.full_orth {
            let mut basis = wmat.clone();
            let mut imgs = aw.clone();
            if let Some((res2, av_hat)) = &stage2 {
                basis.hcat(&state.y.matmul(&res2.v.columns))?;
                imgs.hcat(av_hat)?;
            }
            if cfg.keep_artifacts {
                augmenting = Some(basis.clone());
            }
            let aug3 = DirectAugmentation::from_parts(basis, imgs, factor)?;
            augmented_pcg_from(a, x2, r2, Some(&aug3), &precond, &opts3, &sink, obs3)
        } else {
            let mut basis = selection(y, &w_idx);
            let mut imgs = yaw.clone();
            if let Some((res2, _)) = &stage2 {
                basis.hcat(&res2.v.columns)?;
                imgs.hcat(&res2.images)?;
            }
            if cfg.keep_artifacts {
                augmenting = Some(state.y.clone());
            }
            let inner =
                InnerAugmentation::new(a, &state.y, basis, imgs, factor, tol.eps_inner, cfg.mode)?;
            let r = augmented_pcg_from(a, x2, r2, Some(&inner), &precond, &opts3, &sink, obs3);
            report.inner_iters = inner.iterations();
            r
        }
    };
    let (res3, converged) = match res3 {
        Ok(r) => (r, true),
        Err(Error::NotConverged { partial: Partial::Krylov(p), .. }) => (*p, false),
        Err(e) => return Err(e),
    };
    report.stage3_iters = res3.k;
    report.final_residual = res3.final_residual();
    report.converged = converged;
    report.residual_history = res3.residual_history.clone();

    if cfg.recycle {
        let ay_known = (w == y && w_idx.iter().enumerate().all(|(k, &i)| k == i)).then_some(&aw);
        report.truncated = update_basis(a, state, &res3, &xhat, ay_known, cfg, ctx, &sink)?;
    }
    let counts = sink.snapshot();
    report.matvecs = counts.matvecs;
    report.precond_apps = counts.precond_apps;
    report.wall_ms = start.elapsed().as_secs_f64() * 1e3;

    let outcome = SystemOutcome {
        artifacts: cfg.keep_artifacts.then(|| StageArtifacts {
            xbar: xguess.to_vec(),
            stage3_start: x_stage3_start,
            augmenting: augmenting.unwrap_or_else(|| DenseMatrix::zeros(n, 0)),
        }),
        x: res3.x,
        report,
    };
    if converged {
        Ok(outcome)
    } else {
        Err(Error::NotConverged {
            iterations: outcome.report.stage3_iters,
            residual: outcome.report.final_residual,
            partial: Partial::System(Box::new(outcome)),
        })
    }
}

/// Appends the stage-3 directions (scaled to unit energy norm) to `Y`, admits them
/// to the stage-1 basis, records the solution coefficients and truncates when the
/// storage cap is exceeded. Returns whether a truncation happened.
///
/// `eta_y` holds the coefficients in `Y` of the iterate that started stage 3;
/// `ay_known`, when given, is `A Y` for the current matrix.
#[allow(clippy::too_many_arguments)]
pub fn update_basis(
    a: &SparseSpdMatrix,
    state: &mut RecycleState,
    res: &AugmentedPcgResult,
    eta_y: &[f64],
    ay_known: Option<&DenseMatrix>,
    cfg: &ThreeStageConfig,
    ctx: &SolveContext<'_>,
    sink: &Instrumentation,
) -> Result<bool> {
    let y_old = state.dim();
    check_dim(y_old, eta_y.len())?;
    let k = res.k;
    let sq: Vec<f64> = res.gamma.iter().map(|g| g.sqrt()).collect();
    let inv: Vec<f64> = sq.iter().map(|s| 1.0 / s).collect();
    let vbar = res.v.columns.scale_cols(&inv);
    let avbar = res.images.scale_cols(&inv);

    let mut eta = eta_y.to_vec();
    eta.extend(res.vhat.iter().zip(&sq).map(|(al, s)| al * s));
    state.history.push(ctx.j, eta);

    let rho = cfg.truncation.stage1_threshold;
    let admitted: Vec<usize> = if rho >= 1.0 {
        (0..k).collect()
    } else if rho <= 0.0 {
        Vec::new()
    } else {
        stage1_threshold_set(&res.gamma, rho)
    };
    state.y.hcat(&vbar)?;
    state.w_idx.extend(admitted.iter().map(|i| y_old + i));
    state.solved += 1;

    let tc = &cfg.truncation;
    let over = tc.storage_cap.is_some_and(|c| state.dim() > c);
    if !over || tc.strategy == Strategy::None {
        return Ok(false);
    }

    let mut az = match ay_known {
        Some(m) if m.cols() == y_old => m.clone(),
        _ => images(a, &state.y.leading_cols(y_old), sink)?,
    };
    az.hcat(&avbar)?;
    let z = DenseBasis::new(std::mem::replace(&mut state.y, DenseMatrix::zeros(a.n(), 0)));
    let outcome = match tc.strategy {
        Strategy::Deflation(m) => deflation_compress_with_images(&z, &az, m, tc.max_stage1)?,
        strategy => {
            let kind = cfg.weights.or(strategy.weight_kind()).unwrap_or(WeightKind::Prev);
            let weights = match (kind, ctx.next) {
                (WeightKind::Ideal, Some((an, bn, xn))) => {
                    weights_ideal(&z, an, bn, xn, &Instrumentation::new())?
                }
                (WeightKind::Rbf, _) => weights_rbf(&state.history, state.history.len())?,
                _ => weights_previous(&state.history)?,
            };
            let metric = if strategy.uses_output_metric() {
                CompressionMetric::Output(ctx.output.ok_or_else(|| {
                    Error::Config("output-metric truncation requires an output matrix".into())
                })?)
            } else {
                CompressionMetric::AMetric
            };
            pod_compress_with_images(&z, &az, &weights, metric, tc)?
        }
    };
    if tc.keep_history {
        let mut gram = z.columns.t_matmul(&az);
        gram.symmetrize();
        state.history.reexpress(&outcome.truncation_map, &gram)?;
    } else {
        state.history.clear();
    }
    state.w_full_at_trunc = outcome.stage1_width == outcome.y_new.m();
    state.w_idx = (0..outcome.stage1_width).collect();
    state.y = outcome.y_new.columns;
    state.last_trunc = ctx.j;
    Ok(true)
}
