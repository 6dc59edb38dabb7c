mod common;

use common::checks::{conditioning_summary, desk_sequence, three_stage_consistency};
use recykl::experiments::standard_methods;
use recykl::problems::{gen_diffusion_sequence, DiffusionParams, LoadProfile};
use recykl::threestage::{run_sequence, stage1_threshold_set, RunOptions};

fn direct_variants() -> Vec<recykl::experiments::MethodSpec> {
    standard_methods(50)
        .into_iter()
        .filter(|m| m.name != "PCG")
        .map(|mut m| {
            // same stage-1/stage-2 split, with stage 3 orthogonalized against W and V̂ only
            m.config.truncation.full_orth = false;
            m
        })
        .collect()
}

#[test]
fn staged_solve_matches_monolithic_augmented_pcg() {
    let seq = gen_diffusion_sequence(&DiffusionParams { nx: 20, ny: 20, p: 8, tol: 1e-8, ..Default::default() }).unwrap();
    for m in direct_variants() {
        for r in three_stage_consistency(&seq, &m.config) {
            assert!(r.rel_err <= 1e-6, "{} j={}: {:e}", m.name, r.j, r.rel_err);
            assert!(
                r.staged_iters.abs_diff(r.monolithic_iters) <= 2,
                "{} j={}: {} vs {}",
                m.name,
                r.j,
                r.staged_iters,
                r.monolithic_iters
            );
        }
    }
}

#[test]
fn invariant_system_needs_no_stage3_iterations() {
    let seq = gen_diffusion_sequence(&DiffusionParams {
        nx: 12,
        ny: 12,
        p: 5,
        drift: 0.0,
        load: LoadProfile::Steady,
        tol: 1e-8,
        ..Default::default()
    })
    .unwrap();
    for m in standard_methods(50).into_iter().filter(|m| m.name != "PCG") {
        let run = run_sequence(&seq, &m.config, &RunOptions::default()).unwrap();
        assert!(run.reports[0].stage3_iters > 0);
        for r in &run.reports[1..] {
            assert_eq!(r.stage3_iters, 0, "{} j={}", m.name, r.j);
            assert_eq!(r.precond_apps, 0);
            assert!(r.final_residual <= 1e-8);
        }
    }
}

#[test]
fn threshold_selects_dominant_directions() {
    let g = [6.0, 3.0, 0.9, 0.1];
    assert_eq!(stage1_threshold_set(&g, 0.0), vec![0, 1, 2, 3]);
    assert_eq!(stage1_threshold_set(&g, 0.05), vec![0, 1, 2]);
    assert_eq!(stage1_threshold_set(&g, 0.25), vec![0, 1]);
    assert_eq!(stage1_threshold_set(&g, 0.5), vec![0]);
    assert!(stage1_threshold_set(&g, 0.6).is_empty());
}

#[test]
fn recycling_beats_pcg_on_small_sequence() {
    let seq = gen_diffusion_sequence(&DiffusionParams { nx: 20, ny: 20, p: 10, ..Default::default() }).unwrap();
    let methods = standard_methods(50);
    let pcg = run_sequence(&seq, &methods[0].config, &RunOptions::default()).unwrap();
    for m in &methods[1..] {
        let run = run_sequence(&seq, &m.config, &RunOptions::default()).unwrap();
        assert!(run.all_converged(), "{}", m.name);
        assert!(run.total_stage3_iters() < pcg.total_stage3_iters(), "{}", m.name);
    }
}

#[test]
fn conditioning_bound_holds_and_invariant_limit_is_exact() {
    let drift = conditioning_summary(&desk_sequence(1e-8, 0.05).truncated(10));
    assert!(drift.all_satisfied, "worst ratio {}", drift.worst_ratio);
    assert!(drift.max_cond <= 2.0);
    let still = conditioning_summary(&desk_sequence(1e-8, 0.0).truncated(10));
    assert!(still.all_satisfied);
    assert!(still.max_lhs <= 1e-8, "{:e}", still.max_lhs);
}
