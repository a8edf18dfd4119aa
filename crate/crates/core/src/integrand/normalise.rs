use std::f64::consts::PI;

use crate::error::{QucError, Result};
use crate::linalg::{Mat2, Vec2};
use crate::optim::{golden_section, minimise, MinimiseOptions, Objective2};

use super::{combine, Combinator, Integrand};

impl Objective2 for Integrand {
    fn value(&self, x: &Vec2) -> f64 {
        self.eval(x)
    }
    fn grad(&self, x: &Vec2) -> Vec2 {
        Integrand::grad(self, x)
    }
    fn hess(&self, x: &Vec2) -> Mat2 {
        Integrand::hess(self, x)
    }
}

/// Result of [`normalise`]: the normalised integrand and the data used to
/// build it.
#[derive(Debug, Clone)]
pub struct Normalised {
    pub integrand: Integrand,
    pub argmin: Vec2,
    pub min_value: f64,
    /// `inf_{|e|=1} |DF(z̄ + e)|` before scaling.
    pub i_f: f64,
}

/// Minimum point and value by damped Newton from the closed-form guess (or 0),
/// to `|DF| ≤ 1e-12·(1+|F(0)|)`.
pub fn argmin(f: &Integrand) -> Result<(Vec2, f64)> {
    let start = f.known_argmin().unwrap_or_else(Vec2::zeros);
    let tol = 1e-12 * (1.0 + f.eval(&Vec2::zeros()).abs());
    let m = minimise(f, start, &MinimiseOptions { max_iter: 500, grad_tol: tol });
    if !m.converged || !m.value.is_finite() {
        return Err(QucError::NonConvergence {
            context: format!("argmin of {}", f.descriptor()),
            iterations: m.iterations,
            residual: m.grad_norm,
        });
    }
    Ok((m.x, m.value))
}

/// `inf_{|e|=1} |DF(center + e)|` from 720 angles and a golden-section
/// refinement around the smallest sample.
pub fn i_f(f: &Integrand, center: &Vec2) -> f64 {
    let n = 720;
    let norm_at = |th: f64| f.grad(&(center + Vec2::new(th.cos(), th.sin()))).norm();
    let step = 2.0 * PI / n as f64;
    let (k, best) = (0..n)
        .map(|k| (k, norm_at(k as f64 * step)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty angle set");
    let th = k as f64 * step;
    let (_, refined) = golden_section(norm_at, th - step, th + step, 1e-12);
    best.min(refined)
}

/// `F̃(z) = (F(z + z̄) − F(z̄)) / i_F`.
pub fn normalise(f: &Integrand) -> Result<Normalised> {
    let (zbar, fmin) = argmin(f)?;
    let i = i_f(f, &zbar);
    if !(i > 0.0) || !i.is_finite() {
        return Err(QucError::Inconsistent(format!("i_F = {i} for {}", f.descriptor())));
    }
    let mut g = f.clone();
    if zbar != Vec2::zeros() {
        g = combine(Combinator::Shifted { offset: zbar, inner: g })?;
    }
    if fmin != 0.0 {
        g = combine(Combinator::AffineAdd { slope: Vec2::zeros(), constant: -fmin, inner: g })?;
    }
    if i != 1.0 {
        g = combine(Combinator::Scaled { lambda: 1.0 / i, inner: g })?;
    }
    Ok(Normalised { integrand: g, argmin: zbar, min_value: fmin, i_f: i })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrand::{make_anisotropic_quadratic, make_power};
    use approx::assert_relative_eq;

    #[test]
    fn shifted_quadratic_recentres() {
        let q = make_power(2.0).unwrap();
        let f = combine(Combinator::Shifted { offset: Vec2::new(-1.0, -1.0), inner: q }).unwrap();
        let n = normalise(&f).unwrap();
        assert_relative_eq!(n.argmin, Vec2::new(1.0, 1.0), epsilon = 1e-12);
        assert_relative_eq!(n.i_f, 1.0, epsilon = 1e-12);
        for z in [Vec2::new(0.3, 2.0), Vec2::new(-5.0, 1.0)] {
            assert_relative_eq!(n.integrand.eval(&z), 0.5 * z.norm_squared(), max_relative = 1e-12);
        }
    }

    #[test]
    fn power_is_a_fixed_point() {
        let f = make_power(3.0).unwrap();
        let n = normalise(&f).unwrap();
        assert_relative_eq!(n.i_f, 1.0, epsilon = 1e-14);
        let z = Vec2::new(0.7, -2.2);
        assert_relative_eq!(n.integrand.eval(&z), f.eval(&z), epsilon = 1e-10);
    }

    #[test]
    fn scaled_quadratic_divides_by_four() {
        let f = make_anisotropic_quadratic(Mat2::from_diagonal_element(4.0)).unwrap();
        let n = normalise(&f).unwrap();
        assert_relative_eq!(n.i_f, 4.0, epsilon = 1e-12);
        let z = Vec2::new(1.5, 0.5);
        assert_relative_eq!(n.integrand.eval(&z), 0.5 * z.norm_squared(), epsilon = 1e-12);
        assert_relative_eq!(i_f(&n.integrand, &Vec2::zeros()), 1.0, epsilon = 1e-6);
    }
}
