use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{invalid, Result};
use crate::integrand::{Integrand, Kind};
use crate::linalg::{Mat2, Vec2};

/// Normalising constant of `(1−|x|²)⁴₊` on the unit disc: `∫ = π/5`.
pub const BUMP_NORMALISATION: f64 = 5.0 / PI;

/// `φ(x) = c·(1−|x|²)⁴` on `|x| ≤ 1`, zero outside.
pub fn bump(x: &Vec2) -> f64 {
    let s = 1.0 - x.norm_squared();
    if s <= 0.0 {
        0.0
    } else {
        BUMP_NORMALISATION * s.powi(4)
    }
}

/// Mollifier `φ_ε(x) = ε⁻² φ(x/ε)` with a polar product rule on its support.
#[derive(Debug, Clone)]
pub struct MollifierSpec {
    pub epsilon: f64,
    pub radial: usize,
    pub angular: usize,
    /// Nodes in the unit disc and weights including the bump density.
    nodes: Arc<[(Vec2, f64)]>,
    raw_mass: f64,
}

impl MollifierSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        Self::with_rule(epsilon, 24, 24)
    }

    /// Gauss–Legendre in the radius times equispaced angles. An even angle
    /// count makes the rule symmetric under `x ↦ −x`, so its first moment
    /// vanishes exactly.
    pub fn with_rule(epsilon: f64, radial: usize, angular: usize) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(invalid("epsilon", "mollifier scale must be positive"));
        }
        if angular < 2 || !angular.is_multiple_of(2) {
            return Err(invalid("angular", "angle count must be even and at least 2"));
        }
        let deg = NonZeroUsize::new(radial).ok_or_else(|| invalid("radial", "must be positive"))?;
        let gl = GaussLegendre::new(deg);
        let dth = 2.0 * PI / angular as f64;
        let mut nodes = Vec::with_capacity(radial * angular);
        for &(x, w) in gl.as_node_weight_pairs() {
            let rho = 0.5 * (x + 1.0);
            let wr = 0.5 * w * rho * BUMP_NORMALISATION * (1.0 - rho * rho).powi(4) * dth;
            for k in 0..angular {
                let th = dth * (k as f64 + 0.5);
                nodes.push((rho * Vec2::new(th.cos(), th.sin()), wr));
            }
        }
        let raw_mass: f64 = nodes.iter().map(|n| n.1).sum();
        for n in &mut nodes {
            n.1 /= raw_mass;
        }
        Ok(Self { epsilon, radial, angular, nodes: nodes.into(), raw_mass })
    }

    /// Quadrature of `φ` before renormalisation; 1 up to rounding for an
    /// exact rule.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    pub fn nodes(&self) -> &[(Vec2, f64)] {
        &self.nodes
    }

    /// `∫ g(z − y) φ_ε(y) dy` by the rule.
    pub fn convolve<T>(&self, z: &Vec2, g: impl Fn(&Vec2) -> T) -> T
    where
        T: std::ops::Mul<f64, Output = T> + std::iter::Sum<T>,
    {
        self.nodes.iter().map(|(x, w)| g(&(z - self.epsilon * x)) * *w).sum()
    }
}

/// `(F * φ_ε)(z) + (μ/2)|z|²`.
#[derive(Debug, Clone)]
pub struct Mollified {
    inner: Integrand,
    spec: MollifierSpec,
    mu: f64,
}

impl Mollified {
    pub fn inner(&self) -> &Integrand {
        &self.inner
    }
    pub fn epsilon(&self) -> f64 {
        self.spec.epsilon
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn spec(&self) -> &MollifierSpec {
        &self.spec
    }

    pub(crate) fn eval(&self, z: &Vec2) -> f64 {
        self.spec.convolve(z, |y| self.inner.eval(y)) + 0.5 * self.mu * z.norm_squared()
    }

    pub(crate) fn grad(&self, z: &Vec2) -> Vec2 {
        self.spec.convolve(z, |y| self.inner.grad(y)) + self.mu * z
    }

    pub(crate) fn hess(&self, z: &Vec2) -> Mat2 {
        self.spec.convolve(z, |y| self.inner.hess(y)) + Mat2::from_diagonal_element(self.mu)
    }
}

pub fn mollify_plus_quadratic(f: &Integrand, epsilon: f64, mu: f64) -> Result<Integrand> {
    mollify_with(f, MollifierSpec::new(epsilon)?, mu)
}

pub fn mollify_with(f: &Integrand, spec: MollifierSpec, mu: f64) -> Result<Integrand> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(invalid("mu", "quadratic weight must be nonnegative"));
    }
    Ok(Integrand::from_kind(Kind::Mollified(Mollified { inner: f.clone(), spec, mu })))
}
