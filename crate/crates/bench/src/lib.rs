//! Benchmark fixtures shared by the criterion suites.

use quc_core::expr::BoundaryExpr;
use quc_core::integrand::{make_blend, make_power, BlendParams, BlendReport};
use quc_core::solver::{BoundaryData, Domain, GridProblem};
use quc_core::{Integrand, Vec2};

pub fn blend() -> Integrand {
    let w = Vec2::new(0.6, -0.6);
    let eps = 0.5 * BlendReport::compute(3.0, 1.5, w.norm()).threshold;
    make_blend(BlendParams { p: 3.0, q: 1.5, w, eps }).expect("valid blend")
}

pub fn power_problem(p: f64, n: usize) -> GridProblem {
    let data = BoundaryData::Expression(BoundaryExpr::parse("x^2 - y^2").expect("valid expression"));
    GridProblem::new(Domain::unit_square(), n, data, make_power(p).expect("valid exponent")).expect("valid problem")
}

pub fn ring(n: usize, r: f64) -> Vec<Vec2> {
    (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            Vec2::new(r * t.cos(), r * t.sin())
        })
        .collect()
}
