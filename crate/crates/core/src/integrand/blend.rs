use crate::error::{invalid, Result};
use crate::linalg::{Mat2, Vec2};

use super::{make_power, Integrand, Kind};

/// `|z|^p/p + ε φ(z)` with a bump `φ` that is singular at `w` and constant
/// near the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendParams {
    pub p: f64,
    pub q: f64,
    pub w: Vec2,
    pub eps: f64,
}

/// The four constants bounding the blend Hessian and the resulting
/// admissibility threshold `α/(2β)` for `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendReport {
    /// `inf λ_min(D²d)` on `|z| ≥ r/2`.
    pub alpha: f64,
    /// `sup |D²φ|₂` on `|z−w| ≥ r/4`, sampled on 2001 radii.
    pub beta: f64,
    /// `sup λ_max(D²d)` on `|z−w| ≤ r/4`.
    pub gamma: f64,
    /// `inf λ_min(D²s)` on `|z−w| ≥ r/4`.
    pub delta: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone)]
struct Smoothing {
    q: f64,
    rho0: f64,
    rho1: f64,
    coef: [f64; 6],
}

impl Smoothing {
    /// Quintic in `u = (ρ−ρ0)/(ρ1−ρ0)` matching value, slope and curvature of
    /// `ρ^q/q` at `ρ0` and of the constant 1 at `ρ1`.
    fn new(q: f64, r: f64) -> Self {
        let (rho0, rho1) = (0.25 * r, 0.5 * r);
        let l = rho1 - rho0;
        let c0 = rho0.powf(q) / q;
        let c1 = l * rho0.powf(q - 1.0);
        let c2 = 0.5 * l * l * (q - 1.0) * rho0.powf(q - 2.0);
        let r0 = 1.0 - (c0 + c1 + c2);
        let r1 = -(c1 + 2.0 * c2);
        let r2 = -2.0 * c2;
        let c3 = 10.0 * r0 - 4.0 * r1 + 0.5 * r2;
        let c4 = -15.0 * r0 + 7.0 * r1 - r2;
        let c5 = 6.0 * r0 - 3.0 * r1 + 0.5 * r2;
        Self { q, rho0, rho1, coef: [c0, c1, c2, c3, c4, c5] }
    }

    /// `(ψ, ψ', ψ'')` at radius `rho`.
    fn psi(&self, rho: f64) -> (f64, f64, f64) {
        let q = self.q;
        if rho <= self.rho0 {
            return (rho.powf(q) / q, rho.powf(q - 1.0), (q - 1.0) * rho.powf(q - 2.0));
        }
        if rho >= self.rho1 {
            return (1.0, 0.0, 0.0);
        }
        let l = self.rho1 - self.rho0;
        let u = (rho - self.rho0) / l;
        let c = &self.coef;
        let v = c[0] + u * (c[1] + u * (c[2] + u * (c[3] + u * (c[4] + u * c[5]))));
        let d = c[1] + u * (2.0 * c[2] + u * (3.0 * c[3] + u * (4.0 * c[4] + u * 5.0 * c[5])));
        let dd = 2.0 * c[2] + u * (6.0 * c[3] + u * (12.0 * c[4] + u * 20.0 * c[5]));
        (v, d / l, dd / (l * l))
    }
}

#[derive(Debug, Clone)]
pub struct Blend {
    params: BlendParams,
    smoothing: Smoothing,
    d: Integrand,
    report: BlendReport,
}

impl BlendReport {
    pub fn compute(p: f64, q: f64, r: f64) -> Self {
        let sm = Smoothing::new(q, r);
        let n = 2001;
        let mut beta: f64 = 0.0;
        for i in 0..n {
            let rho = sm.rho0 + (sm.rho1 - sm.rho0) * i as f64 / (n - 1) as f64;
            let (_, d1, d2) = sm.psi(rho);
            beta = beta.max(d2.hypot(d1 / rho));
        }
        let alpha = (0.5 * r).powf(p - 2.0);
        Self {
            alpha,
            beta,
            gamma: (p - 1.0) * (1.25 * r).powf(p - 2.0),
            // (q−1)ρ^{q−2} decays to 0 as ρ → ∞
            delta: 0.0,
            threshold: alpha / (2.0 * beta),
        }
    }
}

impl Blend {
    pub fn params(&self) -> &BlendParams {
        &self.params
    }

    pub fn report(&self) -> &BlendReport {
        &self.report
    }

    /// The bump `φ` alone.
    pub fn phi(&self, z: &Vec2) -> f64 {
        self.smoothing.psi((z - self.params.w).norm()).0
    }

    pub(super) fn eval(&self, z: &Vec2) -> f64 {
        self.d.eval(z) + self.params.eps * self.phi(z)
    }

    pub(super) fn grad(&self, z: &Vec2) -> Vec2 {
        let y = z - self.params.w;
        let rho = y.norm();
        let g = if rho == 0.0 { Vec2::zeros() } else { self.smoothing.psi(rho).1 / rho * y };
        self.d.grad(z) + self.params.eps * g
    }

    pub(super) fn hess(&self, z: &Vec2) -> Mat2 {
        let y = z - self.params.w;
        let rho = y.norm();
        let h = if rho == 0.0 {
            Mat2::from_diagonal_element(f64::INFINITY)
        } else {
            let (_, d1, d2) = self.smoothing.psi(rho);
            let u = y / rho;
            let uu = u * u.transpose();
            d2 * uu + d1 / rho * (Mat2::identity() - uu)
        };
        self.d.hess(z) + self.params.eps * h
    }
}

/// Builds the blend and rejects weights at or above the computed threshold.
pub fn make_blend(params: BlendParams) -> Result<Integrand> {
    let BlendParams { p, q, w, eps } = params;
    if !(p > 2.0) || !p.is_finite() {
        return Err(invalid("p", "blend exponent p must exceed 2"));
    }
    if !(q > 1.0 && q < 2.0) {
        return Err(invalid("q", "blend exponent q must lie in (1, 2)"));
    }
    let r = w.norm();
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid("w", "singular point must be nonzero"));
    }
    if !(eps > 0.0) {
        return Err(invalid("eps", "weight must be positive"));
    }
    let report = BlendReport::compute(p, q, r);
    if !(eps < report.threshold) {
        return Err(invalid(
            "eps",
            format!("weight {eps} is not below the admissibility threshold {}", report.threshold),
        ));
    }
    let blend = Blend { params, smoothing: Smoothing::new(q, r), d: make_power(p)?, report };
    Ok(Integrand::from_kind(Kind::Blend(blend)))
}
