//! Values checked against independent high-precision evaluations.

use proptest::prelude::*;
use twolin::drift_matrix::{
    build_matrix, classifier_sign_changes, eigen_analysis, symmetric_threshold, DriftMatrix,
};
use twolin::exact_drift::{brute_force_drift, exact_drift};
use twolin::stats::{wilson_interval, Z95};
use twolin::{Params, State};

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs().max(1e-300)
}

#[test]
fn symmetric_chi2_matrix() {
    let m = DriftMatrix::from_rates(2.0f64, 0.5, 0.5);
    assert!(close(m.a, 0.503214724408055013, 1e-14));
    assert!(close(m.b, -0.367879441171442322, 1e-14));
    assert_eq!(m.a, m.d);
    assert_eq!(m.b, m.c);
    let es = eigen_analysis(&m).unwrap();
    assert!(close(es.gamma0, 1.0, 1e-14));
    assert!(close(es.classifier, 0.135335283236612692, 1e-13));
    assert!(close(es.lambda1, 0.135335283236612692, 1e-13));
    assert!(close(es.lambda2, 0.871094165579497335, 1e-14));
}

#[test]
fn symmetric_chi3_is_inefficient() {
    let es = eigen_analysis(&DriftMatrix::from_rates(3.0f64, 0.5, 0.5)).unwrap();
    assert!(close(es.matrix.a, 0.409375842774440658, 1e-14));
    assert!(close(es.matrix.b, -0.502042860333967115, 1e-14));
    assert!(close(es.classifier, -0.0926670175595264572, 1e-13));
}

#[test]
fn threshold_value() {
    assert!((symmetric_threshold() - 2.55692908552214759).abs() < 1e-12);
}

#[test]
fn asymmetric_classifier_values() {
    for &(chi, want) in &[(0.5f64, 0.08788), (1.0, 0.08902), (2.0, 0.03531), (4.0, -0.01263), (8.0, -0.00283)] {
        let es = eigen_analysis(&DriftMatrix::from_rates(chi, 0.5, 0.25)).unwrap();
        assert!((es.classifier - want).abs() < 5e-6, "chi {chi}: {}", es.classifier);
    }
    let es = eigen_analysis(&DriftMatrix::from_rates(1.5f64, 0.3, 0.7)).unwrap();
    assert!((es.gamma0 - 6.796).abs() < 5e-4, "{}", es.gamma0);
    assert!((es.classifier - 1.959).abs() < 5e-4, "{}", es.classifier);
    let roots = classifier_sign_changes(0.5, 0.25, &(1..=80).map(|k| 0.1 * k as f64).collect::<Vec<_>>());
    assert_eq!(roots.len(), 1, "{roots:?}");
    assert!(roots[0] > 2.0 && roots[0] < 4.0);
}

#[test]
fn wilson_reference() {
    let iv = wilson_interval(95, 100, Z95);
    assert!((iv.lo - 0.8882495).abs() < 1e-6 && (iv.hi - 0.9784563).abs() < 1e-6, "{iv:?}");
}

#[test]
fn exact_equals_brute_on_random_cases_n12() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let p = Params::new(rng.random_range(0.2..4.0), rng.random_range(0.05..0.95), rng.random_range(0.1..0.9), 12)
            .unwrap();
        let s = State::new(rng.random_range(0..=p.left_len()), rng.random_range(0..=p.right_len()));
        let ex = exact_drift(s, &p).unwrap();
        let bf = brute_force_drift(s, &p).unwrap();
        assert!(ex.max_abs_diff(&bf) < 1e-12, "{p:?} {s:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn eigen_pairs_hold(chi in 0.05f64..10.0, rho in 0.01f64..0.99, ell in 0.01f64..0.99) {
        let es = eigen_analysis(&DriftMatrix::from_rates(chi, rho, ell)).unwrap();
        let scale = es.matrix.max_abs_entry().max(1e-300);
        prop_assert!(es.gamma0 > 0.0);
        prop_assert!(es.root_residual() <= 1e-10 * scale * es.gamma0.max(1.0).powi(2));
        prop_assert!(es.eigen_residual(1) <= 1e-10 * scale * es.gamma0.max(1.0));
        prop_assert!(es.eigen_residual(2) <= 1e-10 * scale * es.gamma0.max(1.0));
        prop_assert!(es.lambda2 > es.lambda1);
        prop_assert_eq!(es.lambda1 > 0.0, es.classifier > 0.0);
    }

    #[test]
    fn mirrored_parts_share_the_verdict(chi in 0.1f64..8.0, rho in 0.05f64..0.95, ell in 0.05f64..0.95) {
        let a = eigen_analysis(&DriftMatrix::from_rates(chi, rho, ell)).unwrap();
        let b = eigen_analysis(&DriftMatrix::from_rates(chi, 1.0 - rho, 1.0 - ell)).unwrap();
        prop_assert!((a.lambda1 - b.lambda1).abs() <= 1e-12 * a.lambda2.abs());
        prop_assert!((a.gamma0 * b.gamma0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn drift_symmetry_under_swap(chi in 0.2f64..4.0, x_l in 0usize..=20, x_r in 0usize..=20) {
        let p = Params::symmetric(chi, 40).unwrap();
        let a = exact_drift(State::new(x_l, x_r), &p).unwrap();
        let b = exact_drift(State::new(x_r, x_l), &p).unwrap();
        prop_assert!((a.d_l - b.d_r).abs() < 1e-14 && (a.d_r - b.d_l).abs() < 1e-14);
    }

    #[test]
    fn matrix_f32_agrees_with_f64(chi in 0.1f32..6.0, rho in 0.05f32..0.95, ell in 0.05f32..0.95) {
        let a = eigen_analysis(&DriftMatrix::from_rates(chi, rho, ell)).unwrap();
        let b = eigen_analysis(&build_matrix(&Params::new(chi as f64, rho as f64, ell as f64, 10).unwrap())).unwrap();
        prop_assert!(((a.gamma0 as f64) - b.gamma0).abs() <= 1e-3 * b.gamma0);
        prop_assert_eq!(a.classifier > 0.0, b.classifier > 0.0);
    }
}
