mod common;

use common::checks::projection_gap;
use recykl::krylov::{pcg, OrthoMode, PcgOptions};
use recykl::linalg::{Instrumentation, SparseSpdMatrix};
use recykl::precond::{PrecondKind, Preconditioner};
use recykl::Error;

#[test]
fn iterates_are_energy_projections() {
    for seed in 0..5 {
        let (gap, k) = projection_gap(seed, 40, 4, false);
        assert!(gap <= 1e-8, "seed {seed}: gap {gap:e} after {k} iterations");
    }
}

#[test]
fn preconditioned_iterates_are_energy_projections() {
    for seed in 10..15 {
        let (gap, k) = projection_gap(seed, 40, 4, true);
        assert!(gap <= 1e-8, "seed {seed}: gap {gap:e} after {k} iterations");
    }
}

#[test]
fn identity_system_one_iteration() {
    let a = SparseSpdMatrix::identity(5);
    let sink = Instrumentation::new();
    let m = Preconditioner::build(PrecondKind::Ssor(1.0), &a).unwrap();
    let b = [1.0, -2.0, 3.0, 0.5, 4.0];
    let res = pcg(&a, &b, &[0.0; 5], &m, &PcgOptions::new(1e-12), &sink).unwrap();
    assert_eq!(res.k, 1);
    for (x, bi) in res.x.iter().zip(&b) {
        assert!((x - bi).abs() < 1e-14);
    }
    let c = sink.snapshot();
    // convergence is tested before preconditioning, so applications equal iterations
    assert_eq!(c.precond_apps, 1);
    assert_eq!(c.matvecs, 1);
}

#[test]
fn iteration_limit_reports_partial() {
    let d: Vec<f64> = (1..=30).map(|i| i as f64).collect();
    let a = SparseSpdMatrix::from_diag(&d).unwrap();
    let sink = Instrumentation::new();
    let m = Preconditioner::identity(30);
    let b = vec![1.0; 30];
    let err = pcg(&a, &b, &[0.0; 30], &m, &PcgOptions::new(1e-14).with_max_iter(3), &sink).unwrap_err();
    match err {
        Error::NotConverged { iterations, residual, .. } => {
            assert_eq!(iterations, 3);
            assert!(residual > 1e-14);
        }
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn cg_and_fom_agree_on_well_conditioned_system() {
    let d: Vec<f64> = (0..50).map(|i| 1.0 + i as f64 / 10.0).collect();
    let a = SparseSpdMatrix::from_diag(&d).unwrap();
    let m = Preconditioner::identity(50);
    let b: Vec<f64> = (0..50).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
    let sink = Instrumentation::new();
    let x0 = vec![0.0; 50];
    let cg = pcg(&a, &b, &x0, &m, &PcgOptions::new(1e-10).with_mode(OrthoMode::Cg), &sink).unwrap();
    let fom = pcg(&a, &b, &x0, &m, &PcgOptions::new(1e-10).with_mode(OrthoMode::Fom), &sink).unwrap();
    assert!((cg.k as i64 - fom.k as i64).abs() <= 1);
    for (u, v) in cg.x.iter().zip(&fom.x) {
        assert!((u - v).abs() < 1e-8);
    }
}

#[test]
fn zero_rhs_needs_no_work() {
    let a = SparseSpdMatrix::identity(3);
    let sink = Instrumentation::new();
    let res = pcg(&a, &[0.0; 3], &[0.0; 3], &Preconditioner::identity(3), &PcgOptions::new(1e-12), &sink).unwrap();
    assert_eq!(res.k, 0);
    assert_eq!(sink.snapshot().matvecs, 0);
}
