#![allow(dead_code)]

use quc_core::integrand::*;
use quc_core::{Mat2, Vec2};

pub fn blend() -> Integrand {
    let w = Vec2::new(0.6, -0.6);
    let eps = 0.5 * BlendReport::compute(3.0, 1.5, w.norm()).threshold;
    make_blend(BlendParams { p: 3.0, q: 1.5, w, eps }).unwrap()
}

pub fn finsler() -> Integrand {
    make_finsler(
        RadialProfile::PowerSum(vec![(1.0, 2.0), (0.5, 3.0)]),
        Mat2::new(2.0, 0.3, 0.3, 1.0),
        Vec2::new(0.3, -0.2),
    )
    .unwrap()
}

/// Named closed-form integrands (no quadrature or prox inside).
pub fn catalogue() -> Vec<(&'static str, Integrand)> {
    let p3 = make_power(3.0).unwrap();
    let p15 = make_power(1.5).unwrap();
    vec![
        ("power 1.5", p15.clone()),
        ("power 2", make_power(2.0).unwrap()),
        ("power 3", p3.clone()),
        ("power 4", make_power(4.0).unwrap()),
        ("anisotropic", make_anisotropic_quadratic(Mat2::new(1.6, 0.0, 0.0, 0.4)).unwrap()),
        ("uhlenbeck", make_uhlenbeck(RadialProfile::PowerSum(vec![(1.0, 2.0), (1.0, 4.0)])).unwrap()),
        ("finsler", finsler()),
        ("blend", blend()),
        ("sum", combine(Combinator::Sum(vec![p3.clone(), p15.clone()])).unwrap()),
        ("scaled", combine(Combinator::Scaled { lambda: 2.5, inner: p3.clone() }).unwrap()),
        ("shifted", combine(Combinator::Shifted { offset: Vec2::new(0.3, -0.1), inner: p3 }).unwrap()),
    ]
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
