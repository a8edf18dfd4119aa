use quc_core::expr::BoundaryExpr;
use quc_core::integrand::{make_power, Integrand};
use quc_core::solver::*;
use rand::{Rng, SeedableRng};

fn problem(dom: Domain, expr: &str, f: Integrand, n: usize) -> GridProblem {
    GridProblem::new(dom, n, BoundaryData::Expression(BoundaryExpr::parse(expr).unwrap()), f).unwrap()
}

fn max_error(sol: &GridSolution, exact: impl Fn(f64, f64) -> f64) -> f64 {
    let p = &sol.problem;
    (0..p.n * p.n)
        .map(|a| {
            let x = p.coords(a);
            (sol.u[a] - exact(x.x, x.y)).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn affine_data_is_reproduced_for_every_exponent() {
    for p in [1.5, 2.0, 3.0] {
        let sol = solve(&problem(Domain::unit_square(), "2*x - 0.5*y + 1", make_power(p).unwrap(), 17)).unwrap();
        assert!(sol.converged);
        assert!(max_error(&sol, |x, y| 2.0 * x - 0.5 * y + 1.0) <= 1e-8, "p = {p}");
    }
}

#[test]
fn smooth_harmonic_converges_at_second_order() {
    let exact = |x: f64, y: f64| x.exp() * y.sin();
    let errs: Vec<f64> = [17, 33, 65]
        .iter()
        .map(|&n| {
            let sol = solve(&problem(Domain::unit_square(), "exp(x)*sin(y)", make_power(2.0).unwrap(), n)).unwrap();
            assert!(sol.converged && sol.residual <= 1e-9);
            max_error(&sol, exact)
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.8, "{errs:?}");
    }
}

#[test]
fn radial_p3_solution_error_decreases() {
    let exact = |x: f64, y: f64| (x * x + y * y).sqrt().sqrt();
    let dom = Domain::rectangle(1.0, 2.0, 1.0, 2.0);
    let mut last = f64::INFINITY;
    for n in [17, 33, 65] {
        let sol = solve(&problem(dom, "sqrt(sqrt(x^2 + y^2))", make_power(3.0).unwrap(), n)).unwrap();
        assert!(sol.converged && sol.residual <= 1e-9);
        let e = max_error(&sol, exact);
        assert!(e < last, "n = {n}: {e} after {last}");
        last = e;
    }
}

#[test]
fn minimiser_beats_random_perturbations() {
    let pr = problem(Domain::unit_square(), "x*y", make_power(3.0).unwrap(), 17);
    let sol = solve(&pr).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for scale in [1e-2, 1e-3, 1e-4] {
        for _ in 0..20 {
            let mut u = sol.u.clone();
            for &a in pr.free_nodes() {
                u[a] += scale * rng.random_range(-1.0..1.0);
            }
            let e = energy(&pr, &u).unwrap();
            assert!(e >= sol.energy - 1e-13 * sol.energy.abs(), "{e} < {}", sol.energy);
        }
    }
}

#[test]
fn nested_refinement_does_not_raise_the_energy() {
    // x*y is linear on every edge, so the coarse spaces nest into the fine ones
    let mut last = f64::INFINITY;
    for n in [9, 17, 33, 65] {
        let sol = solve(&problem(Domain::unit_square(), "x*y", make_power(3.0).unwrap(), n)).unwrap();
        assert!(sol.energy <= last * (1.0 + 1e-12), "n = {n}: {} > {last}", sol.energy);
        last = sol.energy;
    }
}

#[test]
fn newton_and_gradient_descent_agree() {
    let base = problem(Domain::unit_square(), "x^2 - y^2", make_power(3.0).unwrap(), 9);
    let run = |method| {
        let opts = SolverOptions { method, ..SolverOptions::default() };
        solve(&base.clone().with_options(opts)).unwrap()
    };
    let (nt, gd) = (run(Method::Newton), run(Method::GradientDescent));
    assert!(nt.converged && gd.converged);
    assert!(gd.gd_iterations > 0 && nt.newton_iterations > 0);
    assert!((nt.energy - gd.energy).abs() <= 1e-10 * nt.energy.abs(), "{} vs {}", nt.energy, gd.energy);
}

#[test]
fn iteration_cap_reports_non_convergence() {
    let opts = SolverOptions { max_iter: 1, gd_max_iter: 1, ..SolverOptions::default() };
    let pr = problem(Domain::unit_square(), "x^2 - y^2", make_power(3.0).unwrap(), 17).with_options(opts);
    let sol = solve(&pr).unwrap();
    assert!(!sol.converged);
}

#[test]
fn reproducible_mode_is_bitwise_stable() {
    let opts = SolverOptions { reproducible: true, ..SolverOptions::default() };
    let pr = problem(Domain::unit_square(), "x^2 - y^2", make_power(1.5).unwrap(), 17).with_options(opts);
    let (a, b) = (solve(&pr).unwrap(), solve(&pr).unwrap());
    assert_eq!(a.u, b.u);
    assert_eq!(a.energy.to_bits(), b.energy.to_bits());
}

#[test]
fn masked_domain_solves() {
    let dom = Domain::unit_square().with_mask(quc_core::Vec2::new(0.5, 0.5), 0.45);
    let sol = solve(&problem(dom, "x^2 - y^2", make_power(2.0).unwrap(), 33)).unwrap();
    assert!(sol.converged);
    // harmonic, so the error is the discretisation error only
    assert!(max_error(&sol, |x, y| x * x - y * y) < 1e-2);
    let st = stress_field(&sol);
    assert!(st.divergence <= 1e-9);
}
