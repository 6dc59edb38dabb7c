mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use recykl::linalg::{DenseBasis, Instrumentation};
use recykl::problems::Xorshift64Star;
use recykl::truncation::{
    deflation_compress, enforce_a_orthogonality, pod_compress, CompressionMetric, Strategy,
    TruncationConfig,
};
use recykl::weights::{weights_ideal, weights_previous, weights_rbf, WeightHistory};

#[test]
fn harmonic_ritz_values_match_schur_oracle() {
    let mut rng = Xorshift64Star::new(21);
    let a = random_spd(30, 1e3, &mut rng);
    let z = gaussian(30, 10, &mut rng);
    let sink = Instrumentation::new();
    let out = deflation_compress(&DenseBasis::new(from_na(&z)), &spd_sparse(&a), 4, &sink).unwrap();
    let az = &a * &z;
    let k = az.transpose() * &az;
    let g = z.transpose() * &az;
    let mut oracle: Vec<f64> = g.lu().solve(&k).unwrap().schur().complex_eigenvalues().iter().map(|c| c.re).collect();
    oracle.sort_by(|x, y| x.total_cmp(y));
    let ritz = out.ritz_values.unwrap();
    assert_eq!(ritz.len(), 4);
    for (r, o) in ritz.iter().zip(&oracle) {
        assert!((r - o).abs() <= 1e-8 * o.abs().max(1.0), "{r} vs {o}");
    }
    let y = to_na(&out.y_new.columns);
    assert!((y.transpose() * &a * &y - DMatrix::identity(4, 4)).amax() < 1e-9);
}

#[test]
fn deflation_recovers_invariant_subspace() {
    let mut rng = Xorshift64Star::new(22);
    let q = random_orthogonal(20, &mut rng);
    let lam: Vec<f64> = (0..20).map(|i| 1.0 + i as f64).collect();
    let a = &q * DMatrix::from_diagonal(&DVector::from_vec(lam)) * q.transpose();
    let a = (&a + a.transpose()) * 0.5;
    // span of eigenvectors 0..6, mixed
    let z = q.columns(0, 6).into_owned() * gaussian(6, 6, &mut rng);
    let sink = Instrumentation::new();
    let out = deflation_compress(&DenseBasis::new(from_na(&z)), &spd_sparse(&a), 3, &sink).unwrap();
    for (r, e) in out.ritz_values.unwrap().iter().zip([1.0, 2.0, 3.0]) {
        assert!((r - e).abs() < 1e-9);
    }
    let d = subspace_distance(&to_na(&out.y_new.columns), &q.columns(0, 3).into_owned());
    assert!(d < 1e-7);
}

#[test]
fn pod_compression_output_metric_is_a_orthonormal() {
    let mut rng = Xorshift64Star::new(23);
    let a = random_spd(25, 100.0, &mut rng);
    let z = gaussian(25, 8, &mut rng);
    let c = DMatrix::from_fn(3, 25, |_, _| rng.next_f64());
    let cfg = TruncationConfig {
        strategy: Strategy::PodCtCPrev,
        max_retained: Some(3),
        ..Default::default()
    };
    let eta: Vec<f64> = rng.normal_vec(8);
    let sink = Instrumentation::new();
    let cm = from_na(&c);
    let out = pod_compress(&DenseBasis::new(from_na(&z)), &spd_sparse(&a), &eta, CompressionMetric::Output(&cm), &cfg, &sink).unwrap();
    assert!(out.enforced);
    assert_eq!(out.y_new.m(), 3);
    let y = to_na(&out.y_new.columns);
    assert!((y.transpose() * &a * &y - DMatrix::identity(3, 3)).amax() < 1e-9);
    // the retained span holds the dominant output modes
    let zd = &z * DMatrix::from_diagonal(&DVector::from_vec(eta));
    let svd = (&c * &zd).svd(false, true);
    let vt = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let top = DMatrix::from_fn(8, 3, |i, k| vt[(order[k], i)]);
    let expected = &zd * top;
    assert!(subspace_distance(&expected, &y) < 1e-6);
}

#[test]
fn enforce_gives_a_orthonormal_basis() {
    let mut rng = Xorshift64Star::new(24);
    let a = random_spd(15, 1e3, &mut rng);
    let y = gaussian(15, 5, &mut rng);
    let sink = Instrumentation::new();
    let (v, _) = enforce_a_orthogonality(&DenseBasis::new(from_na(&y)), &spd_sparse(&a), &sink).unwrap();
    let v = to_na(&v.columns);
    assert!((v.transpose() * &a * &v - DMatrix::identity(5, 5)).amax() < 1e-10);
    assert!(subspace_distance(&v, &y) < 1e-7);
}

#[test]
fn ideal_weights_are_galerkin_coefficients() {
    let mut rng = Xorshift64Star::new(25);
    let a = random_spd(20, 50.0, &mut rng);
    let z = gaussian(20, 4, &mut rng);
    let b: Vec<f64> = rng.normal_vec(20);
    let xg: Vec<f64> = rng.normal_vec(20);
    let sink = Instrumentation::new();
    let eta = weights_ideal(&DenseBasis::new(from_na(&z)), &spd_sparse(&a), &b, &xg, &sink).unwrap();
    let r = vec_na(&b) - &a * vec_na(&xg);
    let oracle = (z.transpose() * &a * &z).lu().solve(&(z.transpose() * r)).unwrap();
    assert!((vec_na(&eta) - &oracle).norm() <= 1e-9 * oracle.norm());
}

proptest! {
    #[test]
    fn rbf_window_one_is_previous(
        hist in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 1..6), 1..6)
    ) {
        let mut h = WeightHistory::new();
        let mut len = 0;
        for (j, mut e) in hist.into_iter().enumerate() {
            len = len.max(e.len());
            e.resize(len, 0.5);
            h.push(j + 1, e);
        }
        prop_assert_eq!(weights_rbf(&h, 1).unwrap(), weights_previous(&h).unwrap());
        let full = weights_rbf(&h, h.len()).unwrap();
        let mut oracle = vec![0.0; len];
        for (i, (_, e)) in h.entries().iter().rev().enumerate() {
            for (o, v) in oracle.iter_mut().zip(e) {
                *o += v / 2f64.powi(i as i32);
            }
        }
        for (a, b) in full.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
}
