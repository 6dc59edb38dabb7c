//! Oracle comparisons shared by the focused tests and the acceptance target.

use nalgebra::DVector;
use recykl::krylov::{augmented_pcg_from, Augmentation, DirectAugmentation, LinearOperator, PcgOptions};
use recykl::linalg::Instrumentation;
use recykl::precond::{PrecondKind, Preconditioner};
use recykl::problems::Xorshift64Star;

use super::*;

/// Worst relative energy-norm gap, over all iterates of one augmented PCG run, between
/// the iterate and the energy-optimal point of `range(Y) + K_k(M⁻¹PA, M⁻¹r̂₀)` where
/// `P = I − AY(YᵀAY)⁻¹Yᵀ` and `r̂₀ = P b`. Returns `(worst gap, iterations)`.
pub fn projection_gap(seed: u64, n: usize, m: usize, jacobi: bool) -> (f64, usize) {
    let mut rng = Xorshift64Star::new(seed);
    let a = random_spd(n, 1e3, &mut rng);
    let y = gaussian(n, m, &mut rng);
    let b = DVector::from_vec(rng.normal_vec(n));
    let xstar = a.clone().cholesky().unwrap().solve(&b);

    // oracle ingredients
    let ay = &a * &y;
    let g = (y.transpose() * &ay).cholesky().unwrap();
    let proj = |v: &DVector<f64>| v - &ay * g.solve(&(y.transpose() * v));
    let minv = |v: &DVector<f64>| -> DVector<f64> {
        if jacobi {
            DVector::from_fn(n, |i, _| v[i] / a[(i, i)])
        } else {
            v.clone()
        }
    };
    let rhat0 = proj(&b);

    // solver
    let sa = spd_sparse(&a);
    let sink = Instrumentation::new();
    let ydense = from_na(&y);
    let aug = DirectAugmentation::assemble(&sa as &dyn LinearOperator, ydense, &sink).unwrap();
    let c0 = aug.galerkin(b.as_slice());
    let x0 = aug.expand(&c0);
    let ax0 = sa.spmv(&x0, &sink).unwrap();
    let r0: Vec<f64> = b.iter().zip(&ax0).map(|(u, v)| u - v).collect();
    let kind = if jacobi { PrecondKind::Jacobi } else { PrecondKind::Identity };
    let pre = Preconditioner::build(kind, &sa).unwrap();
    let opts = PcgOptions::new(1e-10 * b.norm());
    let mut iterates: Vec<Vec<f64>> = Vec::new();
    let mut obs = |_: usize, x: &[f64]| iterates.push(x.to_vec());
    let res = augmented_pcg_from(&sa, x0, r0, Some(&aug), &pre, &opts, &sink, Some(&mut obs)).unwrap();

    let scale = a_norm(&a, &xstar);
    let zero = DVector::zeros(n);
    let mut krylov: Vec<DVector<f64>> = Vec::new();
    let mut v = minv(&rhat0);
    let mut worst: f64 = 0.0;
    for x in &iterates {
        krylov.push(v.clone() / v.norm());
        let mut cols = y.clone();
        for k in &krylov {
            let last = cols.ncols();
            cols = cols.insert_column(last, 0.0);
            cols.set_column(last, k);
        }
        let basis = orth_basis(&cols, 1e-13);
        let xo = energy_projection(&a, &b, &zero, &basis);
        let gap = a_norm(&a, &(DVector::from_column_slice(x) - xo)) / scale;
        worst = worst.max(gap);
        // next Krylov vector, orthogonalized for stability
        let mut w = minv(&proj(&(&a * krylov.last().unwrap())));
        for _ in 0..2 {
            for q in &krylov {
                let h = q.dot(&w);
                w -= q * h;
            }
        }
        v = w;
    }
    (worst, res.k)
}

pub struct ConsistencyRow {
    pub j: usize,
    pub rel_err: f64,
    pub staged_iters: usize,
    pub monolithic_iters: usize,
}

/// Solves `seq` system by system with `cfg` and, for each system, compares the
/// staged solution with one explicit augmented PCG over the stage-3 augmenting
/// basis, started from the Galerkin solution over that basis.
pub fn three_stage_consistency(
    seq: &recykl::problems::SystemSequence,
    cfg: &recykl::threestage::ThreeStageConfig,
) -> Vec<ConsistencyRow> {
    use recykl::linalg::sub;
    use recykl::threestage::{solve_system, RecycleState, SolveContext, ThreeStageConfig};
    let cfg = ThreeStageConfig { keep_artifacts: true, ..cfg.clone() };
    let mut state = RecycleState::new(seq.n());
    let mut rows = Vec::new();
    for (k, s) in seq.systems().iter().enumerate() {
        let j = k + 1;
        let tol = cfg.tolerances.resolve(s.tol);
        let ctx = SolveContext { j, ..Default::default() };
        let out = solve_system(&s.a, &s.b, &s.xguess, &tol, &mut state, &cfg, &ctx, None).unwrap();
        let y = out.artifacts.as_ref().unwrap().augmenting.clone();

        let sink = Instrumentation::new();
        let pre = Preconditioner::build(cfg.precond, &s.a).unwrap();
        let mut opts = PcgOptions::new(s.tol);
        opts.mode = cfg.mode;
        let ax = s.a.spmv(&s.xguess, &sink).unwrap();
        let mut r0 = sub(&s.b, &ax);
        let mut x0 = s.xguess.clone();
        let mono = if y.cols() == 0 {
            augmented_pcg_from(&*s.a, x0, r0, None, &pre, &opts, &sink, None).unwrap()
        } else {
            let aug = DirectAugmentation::assemble(&*s.a as &dyn LinearOperator, y, &sink).unwrap();
            let c = aug.galerkin(&r0);
            let dx = aug.expand(&c);
            let adx = s.a.spmv(&dx, &sink).unwrap();
            for i in 0..x0.len() {
                x0[i] += dx[i];
                r0[i] -= adx[i];
            }
            augmented_pcg_from(&*s.a, x0, r0, Some(&aug), &pre, &opts, &sink, None).unwrap()
        };
        let d = sub(&out.x, &mono.x);
        let an = |v: &[f64]| recykl::linalg::dot(v, &s.a.spmv(v, &sink).unwrap()).sqrt();
        rows.push(ConsistencyRow {
            j,
            rel_err: an(&d) / an(&mono.x),
            staged_iters: out.report.stage3_iters,
            monolithic_iters: mono.k,
        });
    }
    rows
}

/// The 20-system, 2500-unknown drifting diffusion sequence at forcing tolerance `tol`.
pub fn desk_sequence(tol: f64, drift: f64) -> recykl::problems::SystemSequence {
    use recykl::problems::{gen_diffusion_sequence, DiffusionParams};
    gen_diffusion_sequence(&DiffusionParams { tol, drift, ..Default::default() }).unwrap()
}

pub struct ConditioningSummary {
    pub all_satisfied: bool,
    pub worst_ratio: f64,
    pub max_lhs: f64,
    pub max_cond: f64,
    pub truncations: usize,
}

/// Runs the full-stage-1 POD method with tracing and checks the conditioning bound
/// for every system.
pub fn conditioning_summary(seq: &recykl::problems::SystemSequence) -> ConditioningSummary {
    use recykl::analysis::check_conditioning_bound;
    use recykl::experiments::standard_methods;
    use recykl::threestage::{run_sequence, RunOptions};
    let m = standard_methods(50).into_iter().find(|m| m.name == "POD(25,0)").unwrap();
    let run = run_sequence(seq, &m.config, &RunOptions { trace: true, ..Default::default() }).unwrap();
    assert!(run.flags.hypotheses_hold());
    let reports = check_conditioning_bound(&run.trace, &run.flags).unwrap();
    ConditioningSummary {
        all_satisfied: reports.iter().all(|r| r.satisfied),
        worst_ratio: reports.iter().map(|r| r.lhs / r.rhs).fold(0.0, f64::max),
        max_lhs: reports.iter().map(|r| r.lhs).fold(0.0, f64::max),
        max_cond: run.trace.iter().map(|t| t.cond).fold(0.0, f64::max),
        truncations: run.flags.truncations,
    }
}

fn same_matrix(a: &recykl::linalg::SparseSpdMatrix, b: &recykl::linalg::SparseSpdMatrix) -> bool {
    a.n() == b.n()
        && a.row_offsets() == b.row_offsets()
        && a.col_indices() == b.col_indices()
        && a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Bitwise equality of two sequences, including tolerances and the output matrix.
pub fn sequences_identical(
    a: &recykl::problems::SystemSequence,
    b: &recykl::problems::SystemSequence,
) -> bool {
    a.len() == b.len()
        && a.systems().iter().zip(b.systems()).all(|(s, t)| {
            same_matrix(&s.a, &t.a)
                && same_bits(&s.b, &t.b)
                && same_bits(&s.xguess, &t.xguess)
                && s.tol.to_bits() == t.tol.to_bits()
        })
        && match (&a.output, &b.output) {
            (None, None) => true,
            (Some(c), Some(d)) => c.rows() == d.rows() && same_bits(c.data(), d.data()),
            _ => false,
        }
}

/// Writes `seq` under `dir`, reads it back and compares bit for bit.
pub fn roundtrip_exact(seq: &recykl::problems::SystemSequence, dir: &std::path::Path) -> bool {
    let path = recykl::problems::write_sequence(seq, dir).unwrap();
    let back = recykl::problems::load_sequence_manifest(&path).unwrap();
    sequences_identical(seq, &back)
}

/// Stage-3 counts of the standard method set on one sequence.
pub struct RecyclingComparison {
    pub totals: Vec<(String, usize)>,
    pub per_system: Vec<(String, Vec<usize>)>,
    pub max_stored: Vec<(String, usize)>,
}

pub fn recycling_comparison(seq: &recykl::problems::SystemSequence) -> RecyclingComparison {
    use recykl::experiments::{run_method, standard_methods};
    use recykl::threestage::RunOptions;
    let mut out = RecyclingComparison { totals: vec![], per_system: vec![], max_stored: vec![] };
    for m in standard_methods(50) {
        let run = run_method(seq, &m, &RunOptions::default()).unwrap();
        assert!(run.all_converged(), "{}", m.name);
        out.totals.push((m.name.clone(), run.total_stage3_iters()));
        out.per_system.push((m.name.clone(), run.reports.iter().map(|r| r.stage3_iters).collect()));
        let stored = run.reports.iter().map(|r| r.y_dim).max().unwrap_or(0);
        out.max_stored.push((m.name, stored));
    }
    out
}
