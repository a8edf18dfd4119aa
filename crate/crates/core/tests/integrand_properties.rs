mod common;

use common::{catalogue, rel_close};
use proptest::prelude::*;
use quc_core::dual_geometry::coercivity;
use quc_core::integrand::*;
use quc_core::qc_analysis::{estimate_h, SamplingPlan};
use quc_core::Vec2;

fn point() -> impl Strategy<Value = Vec2> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(x, y)| Vec2::new(x, y))
}

fn away_from_singular(f: &Integrand, z: &Vec2, d: f64) -> bool {
    f.singular_points().iter().all(|s| (z - s).norm() > d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn midpoint_convexity(z in point(), w in point()) {
        for (name, f) in catalogue() {
            let mid = f.eval(&(0.5 * (z + w)));
            let avg = 0.5 * (f.eval(&z) + f.eval(&w));
            prop_assert!(mid <= avg + 1e-12 * (1.0 + avg.abs()), "{name}: {mid} > {avg}");
        }
    }

    #[test]
    fn gradient_matches_differences(z in point()) {
        for (name, f) in catalogue() {
            if !away_from_singular(&f, &z, 0.05) {
                continue;
            }
            let g = f.grad(&z);
            let d = f.fd_grad(&z);
            prop_assert!((g - d).norm() <= 1e-5 * (1.0 + g.norm()), "{name} at {z:?}: {g:?} vs {d:?}");
        }
    }

    #[test]
    fn hessian_is_symmetric_and_matches_differences(z in point()) {
        for (name, f) in catalogue() {
            if !away_from_singular(&f, &z, 0.05) {
                continue;
            }
            let h = f.hess(&z);
            let scale = 1.0 + h.norm();
            prop_assert!((h[(0, 1)] - h[(1, 0)]).abs() <= 1e-12 * scale, "{name}: {h:?}");
            let d = f.fd_hess(&z);
            prop_assert!((h - d).norm() <= 1e-3 * scale, "{name} at {z:?}: {h:?} vs {d:?}");
        }
    }

    #[test]
    fn sum_ratio_bound_is_at_most_the_max(p in 1.2f64..6.0, q in 1.2f64..6.0) {
        let (f, g) = (make_power(p).unwrap(), make_power(q).unwrap());
        let s = combine(Combinator::Sum(vec![f.clone(), g.clone()])).unwrap();
        let hmax = f.h_bound().unwrap().max(g.h_bound().unwrap());
        prop_assert!(s.h_bound().unwrap() <= hmax);
        let plan = SamplingPlan { radii: 16, angles: 16, random_points: 200, ..SamplingPlan::default() };
        let measured = estimate_h(&s, &plan).h_est;
        prop_assert!(measured <= hmax * (1.0 + 1e-6), "{measured} > {hmax}");
    }
}

#[test]
fn analytic_and_difference_modes_agree() {
    for (name, f) in catalogue() {
        let fd = f.with_mode(DerivativeMode::FiniteDifference);
        for z in [Vec2::new(0.7, 0.2), Vec2::new(-1.3, 0.9), Vec2::new(2.0, -2.5)] {
            let (a, b) = (f.grad(&z), fd.grad(&z));
            assert!((a - b).norm() <= 1e-5 * (1.0 + a.norm()), "{name}");
            assert_eq!(f.eval(&z), fd.eval(&z));
        }
    }
}

#[test]
fn normalised_integrands_are_coercive() {
    let shifted = combine(Combinator::Scaled {
        lambda: 3.0,
        inner: combine(Combinator::Shifted { offset: Vec2::new(0.4, -0.2), inner: make_power(3.0).unwrap() })
            .unwrap(),
    })
    .unwrap();
    for f in [make_power(3.0).unwrap(), make_power(1.5).unwrap(), shifted] {
        let h = f.h_bound().unwrap();
        let nf = normalise(&f).unwrap();
        let g = &nf.integrand;
        assert!(g.eval(&Vec2::zeros()).abs() < 1e-10);
        assert!(rel_close(i_f(g, &Vec2::zeros()), 1.0, 1e-8));
        // F(z) ≥ |z|^{1+1/H} / C' for |z| ≥ 1, sampled
        let q = 1.0 + 1.0 / h;
        let mut c = f64::INFINITY;
        for i in 0..64 {
            let th = std::f64::consts::TAU * i as f64 / 64.0;
            for j in 0..40 {
                let r = 1.0 + 0.25 * j as f64;
                c = c.min(g.eval(&Vec2::new(r * th.cos(), r * th.sin())) / r.powf(q));
            }
        }
        assert!(c > 0.1, "{}: {c}", f.descriptor());
    }
}

#[test]
fn dual_growth_of_power() {
    // G(y) = F(DF⁻¹(y)) = |y|^{3/2}/3 for p = 3
    let f = make_power(3.0).unwrap();
    let c = coercivity(&f, 16, 100.0, 2.0).unwrap();
    let expected = 1.5;
    assert!((c.exponent - expected).abs() < 1e-8, "{c:?}");
    assert!(rel_close(c.constant, 1.0 / 3.0, 1e-8), "{c:?}");
}
