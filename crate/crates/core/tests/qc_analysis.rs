mod common;

use common::{catalogue, rel_close};
use nalgebra::DMatrix;
use proptest::prelude::*;
use quc_core::integrand::{make_anisotropic_quadratic, make_power};
use quc_core::qc_analysis::*;
use quc_core::Mat2;

// closed forms, written out independently of the library
fn eta(a: f64, b: f64, t: f64) -> f64 {
    t.powf(a).max(t.powf(b))
}

fn eta_inv(a: f64, b: f64, t: f64) -> f64 {
    t.powf(1.0 / a).min(t.powf(1.0 / b))
}

fn profiles() -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 10.0].iter().map(|&h: &f64| (h, 1.0 / h)).collect();
    v.extend([(3.0, 2.0), (0.5, 1.0 / 3.0)]);
    v
}

fn log_uniform() -> impl Strategy<Value = f64> {
    (-8.0f64..8.0).prop_map(f64::exp)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn eta_matches_closed_form(s in log_uniform(), t in log_uniform()) {
        for (a, b) in profiles() {
            let e = EtaProfile::new(a, b).unwrap();
            prop_assert!(rel_close(e.eta(t), eta(a, b, t), 1e-14));
            prop_assert!(rel_close(e.eta_inv(t), eta_inv(a, b, t), 1e-14));
            prop_assert!(eta(a, b, s * t) <= eta(a, b, s) * eta(a, b, t) * (1.0 + 1e-12));
            prop_assert!(eta_inv(a, b, s * t) >= eta_inv(a, b, s) * eta_inv(a, b, t) * (1.0 - 1e-12));
            prop_assert!((eta_inv(a, b, t) * eta(1.0 / a, 1.0 / b, 1.0 / t) - 1.0).abs() <= 1e-12);
            let c = e.compose(&e);
            let (hi, lo) = (a.max(b), a.min(b));
            let closed = eta(hi * hi, lo * lo, t);
            if closed.is_finite() && closed > 0.0 {
                prop_assert!(rel_close(c.eta(t), closed, 1e-12));
                prop_assert!(rel_close(eta(a, b, eta(a, b, t)), closed, 1e-12));
            }
        }
    }

    #[test]
    fn delta_and_h_round_trip(logh in 0.0f64..13.8) {
        let h = logh.exp();
        let d = delta_from_h(h).unwrap();
        prop_assert!(rel_close(d, 2.0 * h.sqrt() / (h + 1.0), 1e-15));
        // H(δ) is ill-conditioned as H → 1, where 1 − δ ~ (H − 1)²/8
        let tol = 1e-12f64.max(1e-15 / (h - 1.0));
        prop_assert!(rel_close(h_from_delta(d).unwrap(), h, tol));
        prop_assert!(rel_close(delta_from_h(h_from_delta(d).unwrap()).unwrap(), d, 1e-15));
    }
}

#[test]
fn library_identity_check_passes_on_samples() {
    let samples: Vec<(f64, f64)> =
        (0..400).map(|i| ((-6.0 + 0.03 * i as f64).exp(), (5.0 - 0.025 * i as f64).exp())).collect();
    for (a, b) in profiles() {
        let rep = eta_identities_check(&EtaProfile::new(a, b).unwrap(), &samples, 1e-12);
        assert!(rep.passed(), "({a}, {b}): {:?}", rep.first_violation);
    }
}

#[test]
fn sharp_pair_reaches_cassels_bound() {
    let f = make_anisotropic_quadratic(Mat2::new(1.6, 0.0, 0.0, 0.4)).unwrap();
    let v = sharp_direction(&f).unwrap();
    let q = monotonicity_quotient(&f, &v, &nalgebra::Vector2::zeros()).unwrap();
    assert!((q - 0.8).abs() < 1e-10, "{q}");
    assert!((cassels_bound(&[1.6, 0.4]) - 0.8).abs() < 1e-15);
    let brute = cassels_oracle(&[1.6, 0.4], 20_000, 7).unwrap();
    assert!((brute - 0.8).abs() < 1e-8, "{brute}");
    let est = measure_delta_monotonicity(&f, &delta_pairs(&f, 2000, 1));
    assert!((est.delta_est - 0.8).abs() < 1e-10);
    assert!(rel_close(est.h_est, 4.0, 1e-8));
}

#[test]
fn power_dilatation_matches_exponent() {
    let plan = SamplingPlan { random_points: 2000, ..SamplingPlan::default() };
    for (p, h) in [(2.5, 1.5), (3.0, 2.0), (4.0, 3.0), (1.25, 4.0), (1.5, 2.0)] {
        let est = estimate_h(&make_power(p).unwrap(), &plan);
        assert!((est.h_est / h - 1.0).abs() < 0.02, "p = {p}: {}", est.h_est);
    }
}

#[test]
fn measured_monotonicity_respects_the_sharp_relation() {
    let plan = SamplingPlan { radii: 24, angles: 48, random_points: 2000, ..SamplingPlan::default() };
    for (name, f) in catalogue() {
        let h = estimate_h(&f, &plan).h_est;
        let d = measure_delta_monotonicity(&f, &delta_pairs(&f, 3000, 3)).delta_est;
        assert!(d >= 2.0 * h.sqrt() / (h + 1.0) - 1e-6, "{name}: δ = {d}, H = {h}");
    }
}

#[test]
fn matrix_inequality_on_random_spd_pairs() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let n = rng.random_range(2..6);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let p = &m * m.transpose() + DMatrix::identity(n, n) * 0.1;
        let s = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let s = &s + s.transpose();
        let r = matrix_inequality_check(&p, &s).unwrap();
        assert!(r.holds, "{r:?}");
    }
}
