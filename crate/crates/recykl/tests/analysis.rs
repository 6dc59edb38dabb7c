mod common;

use common::checks::{conditioning_summary, desk_sequence};
use recykl::analysis::{
    abssep, check_subspace_distance_bound, check_weights_bound, pod_objective, subspace_instance,
    weights_instance, Regime, WeightsVariant,
};
use recykl::linalg::{DenseMatrix, Instrumentation, SparseSpdMatrix};
use recykl::pod::{pod_evd, PodMetric};
use recykl::problems::Xorshift64Star;

#[test]
fn subspace_bounds_hold_for_every_regime() {
    for r in Regime::ALL {
        for seed in 0..100 {
            let inst = subspace_instance(r, seed);
            let rep = check_subspace_distance_bound(&inst, r).unwrap();
            assert!(rep.satisfied, "{r} seed {seed}: {} > {}\n{}", rep.lhs, rep.rhs, serde_json::to_string(&inst).unwrap());
        }
    }
}

#[test]
fn weight_bounds_hold() {
    for v in [WeightsVariant::AMetric, WeightsVariant::OutputMetric] {
        for seed in 0..100 {
            let rep = check_weights_bound(&weights_instance(seed, 40, 6, 1e-2), v).unwrap();
            assert!(rep.satisfied, "{v:?} seed {seed}: {} > {}", rep.lhs, rep.rhs);
        }
        let eq = check_weights_bound(&weights_instance(7, 40, 6, 0.0), v).unwrap();
        assert!(eq.lhs <= 1e-8 && eq.rhs <= 1e-8, "{v:?}: {} {}", eq.lhs, eq.rhs);
    }
}

#[test]
fn identical_ingredients_give_zero_distance() {
    let mut inst = subspace_instance(Regime::General, 3);
    inst.eta_comp = inst.eta_ideal.clone();
    inst.delta = DenseMatrix::zeros(inst.z.rows(), inst.z.rows());
    let rep = check_subspace_distance_bound(&inst, Regime::General).unwrap();
    assert!(rep.lhs <= 1e-7, "{}", rep.lhs);
    assert!(rep.rhs <= 1e-12);
}

#[test]
fn fixed_weights_sweep_shrinks_with_perturbation() {
    let base = subspace_instance(Regime::FixedWeights, 11);
    let n = base.z.rows();
    let mut rng = Xorshift64Star::new(5);
    let r = DenseMatrix::from_fn(n, 3, |_, _| rng.normal());
    let mut dir = r.matmul(&r.transpose()).scaled(1.0 / n as f64);
    dir.symmetrize();
    let mut prev: Option<(f64, f64)> = None;
    for t in [1e-2, 1e-3, 1e-4] {
        let mut inst = base.clone();
        inst.delta = dir.scaled(t);
        let rep = check_subspace_distance_bound(&inst, Regime::FixedWeights).unwrap();
        assert!(rep.satisfied, "t={t}");
        if let Some((l, h)) = prev {
            assert!(rep.lhs < l && rep.rhs < h, "t={t}");
        }
        prev = Some((rep.lhs, rep.rhs));
    }
}

#[test]
fn abssep_matches_variational_definition() {
    // min over unit Z of ‖Λ₁Z − ZΛ₂‖_F for diagonal Λ₁, Λ₂
    let mut rng = Xorshift64Star::new(8);
    for _ in 0..20 {
        let l1: Vec<f64> = (0..3).map(|_| rng.uniform(-3.0, 3.0)).collect();
        let l2: Vec<f64> = (0..3).map(|_| rng.uniform(-3.0, 3.0)).collect();
        let gap = abssep(&l1, &l2);
        let value = |z: &[f64]| {
            let nz = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            (0..9).map(|k| ((l1[k / 3] - l2[k % 3]) * z[k] / nz).powi(2)).sum::<f64>().sqrt()
        };
        let mut best = f64::INFINITY;
        for k in 0..9 {
            for _ in 0..200 {
                let mut z: Vec<f64> = rng.normal_vec(9).iter().map(|v| 1e-3 * v).collect();
                z[k] += 1.0;
                best = best.min(value(&z));
            }
        }
        for _ in 0..5000 {
            assert!(value(&rng.normal_vec(9)) >= gap * (1.0 - 1e-12));
        }
        assert!(best >= gap * (1.0 - 1e-12));
        assert!(best <= gap + 1e-2, "{best} vs {gap}");
    }
}

#[test]
fn pod_objective_spot_checks() {
    let mut rng = Xorshift64Star::new(9);
    let n = 15;
    let s = DenseMatrix::from_fn(n, 6, |_, _| rng.normal());
    let theta = SparseSpdMatrix::from_diag(&(0..n).map(|i| 1.0 + i as f64).collect::<Vec<_>>()).unwrap();
    let gamma: Vec<f64> = (0..6).map(|_| rng.uniform(0.5, 1.5)).collect();
    let sink = Instrumentation::new();
    let pod = pod_evd(&s.clone().into(), &gamma, &theta, 0.6, &sink).unwrap();
    let m = PodMetric::ExplicitSpd(&theta);
    let best = pod_objective(&pod.basis.columns, &s, &gamma, m).unwrap();
    for _ in 0..100 {
        let cand = DenseMatrix::from_fn(n, pod.y, |_, _| rng.normal());
        assert!(pod_objective(&cand, &s, &gamma, m).unwrap() >= best * (1.0 - 1e-10));
    }
    assert!(pod_objective(&s, &s, &[1.0; 6], m).unwrap() <= 1e-10 * best.max(1.0));
}

#[test]
fn conditioning_bound_on_drifting_sequence() {
    let s = conditioning_summary(&desk_sequence(1e-8, 0.05).truncated(10));
    assert!(s.all_satisfied);
    assert!(s.max_cond <= 2.0, "{}", s.max_cond);
}
