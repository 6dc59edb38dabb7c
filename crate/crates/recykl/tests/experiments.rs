mod common;

use recykl::experiments::{
    output_error_run, output_methods, reference_solutions, run_method, standard_methods,
    summarize, validate_methods, weight_study, MethodSpec,
};
use recykl::problems::{gen_diffusion_sequence, gen_output_matrix, DiffusionParams, LoadProfile};
use recykl::threestage::{RunOptions, ThreeStageConfig};
use recykl::weights::WeightKind;

fn small(seed: u64) -> recykl::problems::SystemSequence {
    let seq = gen_diffusion_sequence(&DiffusionParams { nx: 20, ny: 20, p: 10, seed, ..Default::default() }).unwrap();
    let c = gen_output_matrix(40, seq.n(), seed + 100);
    seq.with_output(c).unwrap()
}

#[test]
fn presets_are_valid_and_unique() {
    let mut all = standard_methods(50);
    all.extend(output_methods(50));
    validate_methods(&all).unwrap();
    let mut dup = all.clone();
    dup.push(all[0].clone());
    assert!(validate_methods(&dup).is_err());
}

#[test]
fn stage3_iterations_equal_preconditioner_applications() {
    let seq = small(1);
    for m in standard_methods(50) {
        let run = run_method(&seq, &m, &RunOptions::default()).unwrap();
        for r in &run.reports {
            assert_eq!(r.stage3_iters as u64, r.precond_apps, "{} j={}", m.name, r.j);
        }
    }
}

#[test]
fn no_truncation_never_worse_than_pcg_after_first_system() {
    let seq = small(2);
    let methods = standard_methods(50);
    let pcg = run_method(&seq, &methods[0], &RunOptions::default()).unwrap();
    let nt = run_method(&seq, &methods[1], &RunOptions::default()).unwrap();
    for (a, b) in nt.reports.iter().zip(&pcg.reports).skip(1) {
        assert!(a.stage3_iters <= b.stage3_iters, "j={}", a.j);
    }
}

#[test]
fn infinite_threshold_costs_nothing() {
    let seq = small(3);
    let xs = reference_solutions(&seq).unwrap();
    for m in output_methods(50) {
        let rows = output_error_run(&seq, &m, &[f64::INFINITY], &xs).unwrap();
        assert_eq!(rows[0].avg_matvecs, 0.0);
        assert_eq!(rows[0].avg_precond_apps, 0.0);
        assert_eq!(rows[0].unmet, 0);
    }
}

#[test]
fn exact_recycling_meets_threshold_without_preconditioning() {
    let seq = gen_diffusion_sequence(&DiffusionParams {
        nx: 10,
        ny: 10,
        p: 4,
        drift: 0.0,
        load: LoadProfile::Steady,
        tol: 1e-10,
        ..Default::default()
    })
    .unwrap();
    let seq = seq.clone().with_output(gen_output_matrix(5, seq.n(), 1)).unwrap();
    let xs = reference_solutions(&seq).unwrap();
    let m = MethodSpec::new("recycle", ThreeStageConfig::default());
    let rows = output_error_run(&seq, &m, &[1e-6], &xs).unwrap();
    let first = run_method(&seq.truncated(1), &m, &RunOptions::default()).unwrap();
    // systems 2..4 meet the threshold after stage 1
    let expected = first.reports[0].precond_apps as f64 / 4.0;
    assert!(expected > 0.0);
    assert!(rows[0].avg_precond_apps <= expected + 1e-12);
}

#[test]
fn output_metric_needs_fewer_matvecs_on_most_sequences() {
    let mut wins = 0;
    let seeds = 1..=5u64;
    let total = seeds.clone().count();
    for seed in seeds {
        let seq = small(seed);
        let xs = reference_solutions(&seq).unwrap();
        let m = output_methods(50);
        let a = output_error_run(&seq, &m[0], &[1e-2], &xs).unwrap();
        let c = output_error_run(&seq, &m[1], &[1e-2], &xs).unwrap();
        if c[0].avg_matvecs <= a[0].avg_matvecs {
            wins += 1;
        }
    }
    assert!(wins * 10 >= total * 6, "{wins}/{total}");
}

#[test]
fn weight_study_schemes_coincide_at_full_rank() {
    let seq = small(4);
    let rows = weight_study(&seq, &ThreeStageConfig::default(), 6, &[5, 10_000]).unwrap();
    let full: Vec<_> = rows.iter().filter(|r| r.k == 10_000).collect();
    assert_eq!(full.len(), 3);
    for r in &full {
        assert_eq!(r.retained, r.z_dim);
        assert_eq!(r.post_stage2_residual, full[0].post_stage2_residual);
    }
    let ks: Vec<_> = rows.iter().filter(|r| r.k == 5).map(|r| r.scheme).collect();
    assert_eq!(ks, vec![WeightKind::Ideal, WeightKind::Prev, WeightKind::Rbf]);
}

#[test]
fn summary_averages_reports() {
    let seq = small(5);
    let run = run_method(&seq, &standard_methods(50)[0], &RunOptions::default()).unwrap();
    let s = summarize("PCG", 1e-6, &run.reports);
    let mean = run.reports.iter().map(|r| r.matvecs as f64).sum::<f64>() / run.reports.len() as f64;
    assert!((s.avg_matvecs - mean).abs() < 1e-12);
    assert_eq!(s.not_converged, 0);
    assert_eq!(s.total_stage3_iters, run.total_stage3_iters());
}
