mod common;

use proptest::prelude::*;
use quc_core::estimates::*;
use quc_core::expr::BoundaryExpr;
use quc_core::integrand::{make_power, normalise, Integrand};
use quc_core::solver::*;
use quc_core::Vec2;

fn solved(expr: &str, f: Integrand, n: usize) -> GridSolution {
    let b = BoundaryData::Expression(BoundaryExpr::parse(expr).unwrap());
    solve(&GridProblem::new(Domain::unit_square(), n, b, f).unwrap()).unwrap()
}

fn report() -> impl Strategy<Value = VerificationReport> {
    let num = prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), Just(f64::INFINITY), Just(0.0)];
    let opt = proptest::option::of(-1e6f64..1e6);
    (
        ("[a-z-]{1,12}", num.clone(), num.clone(), num, opt.clone(), opt.clone()),
        (proptest::option::of(any::<bool>()), 9usize..200, "[ -~]{0,30}", opt.clone(), opt),
        (0.0f64..1.0, -1.0f64..1.0, 0usize..5000, "[ -~]{0,20}"),
    )
        .prop_map(|((estimate, lhs, rhs, ratio, constant, k), (holds, n, integrand, rho, h_est), (radius, cx, t, note))| {
            VerificationReport {
                estimate,
                lhs,
                rhs,
                ratio,
                constant,
                empirical_c: constant.map(|c| 2.0 * c),
                slack: Some(1.2),
                holds,
                n,
                integrand,
                h_est,
                k,
                ell_a1: k,
                ell_a2: None,
                rho,
                radius,
                center_x: cx,
                center_y: -cx,
                triangles_inner: t,
                triangles_outer: 2 * t,
                straddling: t / 3,
                note,
            }
        })
}

proptest! {
    #[test]
    fn reports_round_trip_through_csv(rows in proptest::collection::vec(report(), 1..6)) {
        let mut buf = Vec::new();
        write_reports(&mut buf, Some("quc test"), &rows).unwrap();
        let back = read_reports(buf.as_slice()).unwrap();
        prop_assert_eq!(back, rows);
    }

    #[test]
    fn degiorgi_is_bitwise_reproducible(x0 in 0.0f64..5.0, b in 1.5f64..8.0, n_dim in 2usize..5) {
        let a = degiorgi_iterate(x0, 1.0, b, 1.0, n_dim).unwrap();
        let c = degiorgi_iterate(x0, 1.0, b, 1.0, n_dim).unwrap();
        let bits = |o: &DeGiorgiOutcome| o.sequence.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a), bits(&c));
        prop_assert_eq!(a.verdict, c.verdict);
        if a.below_threshold {
            prop_assert_eq!(a.verdict, Verdict::Vanishes);
        }
    }
}

#[test]
fn degiorgi_threshold_separates_the_two_regimes() {
    let t = degiorgi_threshold(1.0, 4.0, 1.0, 2);
    assert_eq!(t, 0.25);
    let below = degiorgi_iterate(0.8 * t, 1.0, 4.0, 1.0, 2).unwrap();
    assert_eq!(below.verdict, Verdict::Vanishes);
    assert!(*below.sequence.last().unwrap() <= VANISH_LEVEL);
    let above = degiorgi_iterate(10.0 * t, 1.0, 4.0, 1.0, 2).unwrap();
    assert_eq!(above.verdict, Verdict::Diverges);
    assert!(!above.below_threshold);
}

#[test]
fn harmonic_caccioppoli_against_closed_form() {
    // u = x² − y²: V = Du = (2x, −2y), DV = diag(2, −2), so |DV|² = 8
    let sol = solved("x^2 - y^2", make_power(2.0).unwrap(), 65);
    let st = stress_field(&sol);
    let c = Vec2::new(0.5, 0.5);
    let (rho, r) = (0.2, 0.4);
    let rep = caccioppoli_check(&sol, &st, &Affine::constant(0.0), rho, r, &c, 1.0).unwrap();
    let area = sol.problem.triangle_area();
    let lhs = 8.0 * area * rep.triangles_inner as f64;
    assert!((rep.lhs - lhs).abs() <= 1e-8 * lhs, "{} vs {lhs}", rep.lhs);
    // ∫_{B_R} |Du|² = 4 ∫ |x|² = 4 (π R⁴/2 + π R² |c|²)
    let mass = 4.0 * (std::f64::consts::PI * r.powi(4) / 2.0 + std::f64::consts::PI * r * r * c.norm_squared());
    let rhs = (std::f64::consts::PI / (r - rho)).powi(2) * mass;
    assert!((rep.rhs / rhs - 1.0).abs() < 0.02, "{} vs {rhs}", rep.rhs);
    assert!(rep.ratio <= CACCIOPPOLI_SLACK);
    assert_eq!(rep.holds, Some(true));
}

#[test]
fn harmonic_lipschitz_ratio_against_closed_form() {
    // F(Du) = 2|x|²; sup over B_{R/2} and mean over B_{2R} in closed form
    let sol = solved("x^2 - y^2", make_power(2.0).unwrap(), 65);
    let c = Vec2::new(0.5, 0.5);
    let r = 0.2;
    let rep = lipschitz_check(&sol, r, &c).unwrap();
    let sup = 2.0 * (c.norm() + r / 2.0).powi(2);
    let mean = 2.0 * (c.norm_squared() + (2.0 * r).powi(2) / 2.0);
    let want = sup / mean;
    assert!((rep.ratio / want - 1.0).abs() < 0.02, "{} vs {want}", rep.ratio);
}

#[test]
fn super_level_sets_are_nested() {
    let sol = solved("x^2 - y^2", make_power(3.0).unwrap(), 33);
    let st = stress_field(&sol);
    let c = Vec2::new(0.5, 0.5);
    let mut last_outer = usize::MAX;
    for k in [0.0, 0.1, 0.5, 1.0, 2.0] {
        let rep = caccioppoli_check(&sol, &st, &Affine::constant(k), 0.2, 0.4, &c, 2.0).unwrap();
        assert!(rep.triangles_inner <= rep.triangles_outer);
        assert!(rep.triangles_outer <= last_outer);
        assert!(rep.lhs >= 0.0 && rep.rhs >= 0.0);
        last_outer = rep.triangles_outer;
    }
}

#[test]
fn sobolev_rows_on_quadratic() {
    // for H = 1 the η pair is (1/2, 1/2), so the bound is (mean energy)^{1/2}
    let sol = solved("x^2 - y^2", make_power(2.0).unwrap(), 33);
    let st = stress_field(&sol);
    let c = Vec2::new(0.5, 0.5);
    let [dv, v] = sobolev_stress_check(&sol, &st, 0.2, &c, 1.0, &normalise(&make_power(2.0).unwrap()).unwrap()).unwrap();
    assert!((dv.lhs - 8f64.sqrt()).abs() < 1e-6, "{}", dv.lhs);
    assert!((v.rhs - dv.rhs * 0.2).abs() < 1e-12);
    assert!(dv.empirical_c.unwrap() > 0.0 && v.empirical_c.unwrap() > 0.0);
}
