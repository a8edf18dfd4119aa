//! Two-dimensional convex minimisation shared by normalisation, proximal
//! points and gradient inversion.

use crate::linalg::{Mat2, SymEigen2, Vec2};

#[derive(Debug, Clone, Copy)]
pub struct MinimiseOptions {
    pub max_iter: usize,
    /// Absolute tolerance on the gradient norm.
    pub grad_tol: f64,
}

impl Default for MinimiseOptions {
    fn default() -> Self {
        Self { max_iter: 500, grad_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Minimum {
    pub x: Vec2,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Convex objective with first and second derivatives.
pub trait Objective2 {
    fn value(&self, x: &Vec2) -> f64;
    fn grad(&self, x: &Vec2) -> Vec2;
    fn hess(&self, x: &Vec2) -> Mat2;
}

fn newton_direction(h: &Mat2, g: &Vec2) -> Option<Vec2> {
    if !h.iter().all(|v| v.is_finite()) {
        return None;
    }
    let e = SymEigen2::new(h);
    if !(e.lambda_max > 0.0) {
        return None;
    }
    let floor = e.lambda_max * 1e-14;
    let inv = |l: f64| 1.0 / l.max(floor);
    let d = -(e.map(inv) * g);
    if d.iter().all(|v| v.is_finite()) && d.dot(g) < 0.0 {
        Some(d)
    } else {
        None
    }
}

/// Armijo backtracking. Near the rounding floor a step is also accepted when
/// the value is unchanged within noise but the gradient shrinks.
fn line_search<O: Objective2 + ?Sized>(
    obj: &O,
    x: &Vec2,
    f: f64,
    g: &Vec2,
    d: &Vec2,
) -> Option<(Vec2, f64, Vec2)> {
    let slope = g.dot(d);
    let noise = 8.0 * f64::EPSILON * (1.0 + f.abs());
    let gn = g.norm();
    let mut t = 1.0;
    for _ in 0..80 {
        let xn = x + t * d;
        let fn_ = obj.value(&xn);
        if fn_.is_finite() {
            if fn_ <= f + 1e-4 * t * slope {
                return Some((xn, fn_, obj.grad(&xn)));
            }
            if fn_ <= f + noise {
                let gnew = obj.grad(&xn);
                if gnew.norm() < gn {
                    return Some((xn, fn_, gnew));
                }
            }
        }
        t *= 0.5;
    }
    None
}

/// Damped Newton with eigenvalue-clamped Hessians, falling back to steepest
/// descent when the Hessian is unusable.
pub fn minimise<O: Objective2 + ?Sized>(obj: &O, x0: Vec2, opts: &MinimiseOptions) -> Minimum {
    let mut x = x0;
    let mut f = obj.value(&x);
    let mut g = obj.grad(&x);
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let gn = g.norm();
        if gn <= opts.grad_tol {
            return Minimum { x, value: f, grad_norm: gn, iterations, converged: true };
        }
        iterations += 1;
        let step = newton_direction(&obj.hess(&x), &g)
            .and_then(|d| line_search(obj, &x, f, &g, &d))
            .or_else(|| {
                // scale steepest descent to a unit-length trial step
                let d = -g / gn.max(f64::MIN_POSITIVE) * (1.0 + x.norm());
                line_search(obj, &x, f, &g, &d)
            });
        match step {
            Some((xn, fn_, gnew)) => {
                x = xn;
                f = fn_;
                g = gnew;
            }
            None => break,
        }
    }
    let gn = g.norm();
    Minimum { x, value: f, grad_norm: gn, iterations, converged: gn <= opts.grad_tol }
}

/// Golden-section search for a minimum of a unimodal function on `[a, b]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Radial(f64, Vec2);
    impl Objective2 for Radial {
        fn value(&self, x: &Vec2) -> f64 {
            (x - self.1).norm().powf(self.0) / self.0
        }
        fn grad(&self, x: &Vec2) -> Vec2 {
            let z = x - self.1;
            let r = z.norm();
            if r == 0.0 {
                Vec2::zeros()
            } else {
                r.powf(self.0 - 2.0) * z
            }
        }
        fn hess(&self, x: &Vec2) -> Mat2 {
            let z = x - self.1;
            let r = z.norm();
            let u = z / r;
            r.powf(self.0 - 2.0) * (Mat2::identity() + (self.0 - 2.0) * u * u.transpose())
        }
    }

    #[test]
    fn newton_finds_shifted_minimum() {
        for p in [1.5, 2.0, 3.0, 4.0] {
            let target = Vec2::new(1.0, -2.0);
            let m = minimise(&Radial(p, target), Vec2::zeros(), &MinimiseOptions::default());
            assert!(m.converged, "p = {p}: {m:?}");
            // |DF| = r^{p-1}, so the gradient tolerance fixes r only to 1e-12^{1/(p-1)}
            let expected = 2.0 * 1e-12f64.powf(1.0 / (p - 1.0));
            assert!((m.x - target).norm() <= expected, "p = {p}: {:?}", m.x);
        }
    }

    #[test]
    fn golden_section_on_parabola() {
        let (x, fx) = golden_section(|t| (t - 0.3).powi(2), -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx < 1e-16);
    }
}
