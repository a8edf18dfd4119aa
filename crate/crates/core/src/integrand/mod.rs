//! Convex integrands `F: R² → R` with gradient and Hessian access.

mod blend;
mod config;
mod envelope;
mod normalise;
mod profile;

pub use blend::{make_blend, Blend, BlendParams, BlendReport};
pub use config::IntegrandSpec;
pub use envelope::{isotropic_envelope, IsotropicEnvelope};
pub use normalise::{argmin, i_f, normalise, Normalised};
pub use profile::{RadialProfile, DEFAULT_RATIO_BOUND};

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::linalg::{Mat2, SymEigen2, Vec2};
use crate::regularize::{Mollified, MoreauYosida};

/// How gradients and Hessians are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeMode {
    #[default]
    Analytic,
    /// Central differences of `eval`: gradient step `1e-6·(1+|z|)`, Hessian
    /// step `1e-5·(1+|z|)`.
    FiniteDifference,
}

pub const FD_GRAD_STEP: f64 = 1e-6;
pub const FD_HESS_STEP: f64 = 1e-5;

#[derive(Debug)]
pub enum Kind {
    Power { p: f64 },
    AnisotropicQuadratic { a: Mat2 },
    Uhlenbeck { profile: RadialProfile },
    /// `G(h(z))` with the Randers gauge `h(z) = √(zᵀBz) + (c, z)`.
    Finsler { profile: RadialProfile, b: Mat2, c: Vec2 },
    Blend(Blend),
    Sum(Vec<Integrand>),
    Scaled { lambda: f64, inner: Integrand },
    /// `inner(z + offset)`.
    Shifted { offset: Vec2, inner: Integrand },
    /// `inner(z) + (slope, z) + constant`.
    AffineAdd { slope: Vec2, constant: f64, inner: Integrand },
    Mollified(Mollified),
    Moreau(MoreauYosida),
}

#[derive(Debug)]
struct Node {
    kind: Kind,
    mode: DerivativeMode,
}

/// Immutable, cheaply clonable integrand handle.
#[derive(Clone)]
pub struct Integrand(Arc<Node>);

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Integrand({})", self.descriptor())
    }
}

#[inline]
fn radial_hess(z: &Vec2, r: f64, d1_over_r: f64, d2: f64) -> Mat2 {
    let u = z / r;
    let uu = u * u.transpose();
    d2 * uu + d1_over_r * (Mat2::identity() - uu)
}

impl Integrand {
    pub(crate) fn from_kind(kind: Kind) -> Self {
        Integrand(Arc::new(Node { kind, mode: DerivativeMode::Analytic }))
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    pub fn mode(&self) -> DerivativeMode {
        self.0.mode
    }

    /// Same integrand with a different derivative mode. Composite kinds are
    /// shared, not copied.
    pub fn with_mode(&self, mode: DerivativeMode) -> Integrand {
        let kind = match &self.0.kind {
            Kind::Power { p } => Kind::Power { p: *p },
            Kind::AnisotropicQuadratic { a } => Kind::AnisotropicQuadratic { a: *a },
            Kind::Uhlenbeck { profile } => Kind::Uhlenbeck { profile: profile.clone() },
            Kind::Finsler { profile, b, c } => Kind::Finsler { profile: profile.clone(), b: *b, c: *c },
            Kind::Blend(bl) => Kind::Blend(bl.clone()),
            Kind::Sum(parts) => Kind::Sum(parts.clone()),
            Kind::Scaled { lambda, inner } => Kind::Scaled { lambda: *lambda, inner: inner.clone() },
            Kind::Shifted { offset, inner } => Kind::Shifted { offset: *offset, inner: inner.clone() },
            Kind::AffineAdd { slope, constant, inner } => {
                Kind::AffineAdd { slope: *slope, constant: *constant, inner: inner.clone() }
            }
            Kind::Mollified(m) => Kind::Mollified(m.clone()),
            Kind::Moreau(m) => Kind::Moreau(m.clone_fresh()),
        };
        Integrand(Arc::new(Node { kind, mode }))
    }

    pub fn eval(&self, z: &Vec2) -> f64 {
        match &self.0.kind {
            Kind::Power { p } => z.norm().powf(*p) / p,
            Kind::AnisotropicQuadratic { a } => 0.5 * z.dot(&(a * z)),
            Kind::Uhlenbeck { profile } => profile.g(z.norm()),
            Kind::Finsler { profile, b, c } => profile.g(randers(b, c, z)),
            Kind::Blend(bl) => bl.eval(z),
            Kind::Sum(parts) => parts.iter().map(|f| f.eval(z)).sum(),
            Kind::Scaled { lambda, inner } => lambda * inner.eval(z),
            Kind::Shifted { offset, inner } => inner.eval(&(z + offset)),
            Kind::AffineAdd { slope, constant, inner } => inner.eval(z) + slope.dot(z) + constant,
            Kind::Mollified(m) => m.eval(z),
            Kind::Moreau(m) => m.eval(z),
        }
    }

    pub fn grad(&self, z: &Vec2) -> Vec2 {
        if self.0.mode == DerivativeMode::FiniteDifference {
            return self.fd_grad(z);
        }
        match &self.0.kind {
            Kind::Power { p } => {
                let r = z.norm();
                if r == 0.0 {
                    Vec2::zeros()
                } else {
                    r.powf(p - 2.0) * z
                }
            }
            Kind::AnisotropicQuadratic { a } => a * z,
            Kind::Uhlenbeck { profile } => {
                let r = z.norm();
                if r == 0.0 {
                    Vec2::zeros()
                } else {
                    profile.d1_over_t(r) * z
                }
            }
            Kind::Finsler { profile, b, c } => {
                let q = z.dot(&(b * z));
                if q == 0.0 {
                    return Vec2::zeros();
                }
                let s = q.sqrt();
                let h = s + c.dot(z);
                profile.d1(h) * (b * z / s + c)
            }
            Kind::Blend(bl) => bl.grad(z),
            Kind::Sum(parts) => parts.iter().map(|f| f.grad(z)).sum(),
            Kind::Scaled { lambda, inner } => *lambda * inner.grad(z),
            Kind::Shifted { offset, inner } => inner.grad(&(z + offset)),
            Kind::AffineAdd { slope, inner, .. } => inner.grad(z) + slope,
            Kind::Mollified(m) => m.grad(z),
            Kind::Moreau(m) => m.grad(z),
        }
    }

    pub fn hess(&self, z: &Vec2) -> Mat2 {
        if self.0.mode == DerivativeMode::FiniteDifference {
            return self.fd_hess(z);
        }
        match &self.0.kind {
            Kind::Power { p } => {
                let r = z.norm();
                if r == 0.0 {
                    let s = if *p > 2.0 {
                        0.0
                    } else if *p == 2.0 {
                        1.0
                    } else {
                        f64::INFINITY
                    };
                    return Mat2::from_diagonal_element(s);
                }
                let rp = r.powf(p - 2.0);
                radial_hess(z, r, rp, (p - 1.0) * rp)
            }
            Kind::AnisotropicQuadratic { a } => *a,
            Kind::Uhlenbeck { profile } => {
                let r = z.norm();
                if r == 0.0 {
                    return Mat2::from_diagonal_element(profile.hessian_at_zero());
                }
                radial_hess(z, r, profile.d1_over_t(r), profile.d2(r))
            }
            Kind::Finsler { profile, b, c } => {
                let z = if z.norm() == 0.0 { Vec2::new(1e-12, 0.0) } else { *z };
                let bz = b * z;
                let q = z.dot(&bz);
                let s = q.sqrt();
                let h = s + c.dot(&z);
                let dh = bz / s + c;
                let d2h = (b - bz * bz.transpose() / q) / s;
                profile.d2(h) * dh * dh.transpose() + profile.d1(h) * d2h
            }
            Kind::Blend(bl) => bl.hess(z),
            Kind::Sum(parts) => parts.iter().map(|f| f.hess(z)).sum(),
            Kind::Scaled { lambda, inner } => *lambda * inner.hess(z),
            Kind::Shifted { offset, inner } => inner.hess(&(z + offset)),
            Kind::AffineAdd { inner, .. } => inner.hess(z),
            Kind::Mollified(m) => m.hess(z),
            Kind::Moreau(m) => m.hess(z),
        }
    }

    pub fn fd_grad(&self, z: &Vec2) -> Vec2 {
        let h = FD_GRAD_STEP * (1.0 + z.norm());
        let dx = Vec2::new(h, 0.0);
        let dy = Vec2::new(0.0, h);
        Vec2::new(
            (self.eval(&(z + dx)) - self.eval(&(z - dx))) / (2.0 * h),
            (self.eval(&(z + dy)) - self.eval(&(z - dy))) / (2.0 * h),
        )
    }

    pub fn fd_hess(&self, z: &Vec2) -> Mat2 {
        let h = FD_HESS_STEP * (1.0 + z.norm());
        let dx = Vec2::new(h, 0.0);
        let dy = Vec2::new(0.0, h);
        let f0 = self.eval(z);
        let fxx = (self.eval(&(z + dx)) - 2.0 * f0 + self.eval(&(z - dx))) / (h * h);
        let fyy = (self.eval(&(z + dy)) - 2.0 * f0 + self.eval(&(z - dy))) / (h * h);
        let fxy = (self.eval(&(z + dx + dy)) - self.eval(&(z + dx - dy)) - self.eval(&(z - dx + dy))
            + self.eval(&(z - dx - dy)))
            / (4.0 * h * h);
        Mat2::new(fxx, fxy, fxy, fyy)
    }

    /// Closed-form bound on the Hessian eigenvalue ratio, when known.
    pub fn h_bound(&self) -> Option<f64> {
        match &self.0.kind {
            Kind::Power { p } => Some((p - 1.0).max(1.0 / (p - 1.0))),
            Kind::AnisotropicQuadratic { a } => Some(SymEigen2::new(a).ratio()),
            Kind::Uhlenbeck { profile } => profile.ratio_bound(),
            Kind::Finsler { .. } | Kind::Blend(_) => None,
            Kind::Sum(parts) => {
                parts.iter().map(|f| f.h_bound()).try_fold(1.0f64, |acc, h| h.map(|h| acc.max(h)))
            }
            Kind::Scaled { inner, .. } | Kind::Shifted { inner, .. } | Kind::AffineAdd { inner, .. } => {
                inner.h_bound()
            }
            Kind::Mollified(m) => m.inner().h_bound(),
            Kind::Moreau(m) => m.inner().h_bound(),
        }
    }

    /// Points where the Hessian may be unbounded or discontinuous; sampling
    /// plans keep a small distance from them.
    pub fn singular_points(&self) -> Vec<Vec2> {
        match &self.0.kind {
            Kind::Power { p } => {
                if *p == 2.0 {
                    vec![]
                } else {
                    vec![Vec2::zeros()]
                }
            }
            Kind::AnisotropicQuadratic { .. } | Kind::Mollified(_) => vec![],
            Kind::Uhlenbeck { .. } | Kind::Finsler { .. } => vec![Vec2::zeros()],
            Kind::Blend(bl) => vec![Vec2::zeros(), bl.params().w],
            Kind::Sum(parts) => {
                let mut pts: Vec<Vec2> = Vec::new();
                for q in parts.iter().flat_map(|f| f.singular_points()) {
                    if !pts.iter().any(|x| (x - q).norm() == 0.0) {
                        pts.push(q);
                    }
                }
                pts
            }
            Kind::Scaled { inner, .. } | Kind::AffineAdd { inner, .. } => inner.singular_points(),
            Kind::Shifted { offset, inner } => inner.singular_points().into_iter().map(|x| x - offset).collect(),
            Kind::Moreau(m) => m.inner().singular_points(),
        }
    }

    /// The Hessian when it does not depend on `z`.
    pub fn constant_hessian(&self) -> Option<Mat2> {
        match &self.0.kind {
            Kind::Power { p } if *p == 2.0 => Some(Mat2::identity()),
            Kind::Power { .. } => None,
            Kind::AnisotropicQuadratic { a } => Some(*a),
            Kind::Uhlenbeck { profile } => match profile {
                RadialProfile::PowerSum(terms) if terms.iter().all(|t| t.1 == 2.0) => {
                    Some(Mat2::from_diagonal_element(terms.iter().map(|t| t.0).sum()))
                }
                _ => None,
            },
            Kind::Finsler { .. } | Kind::Blend(_) => None,
            Kind::Sum(parts) => parts.iter().map(|f| f.constant_hessian()).sum(),
            Kind::Scaled { lambda, inner } => inner.constant_hessian().map(|a| *lambda * a),
            Kind::Shifted { inner, .. } | Kind::AffineAdd { inner, .. } => inner.constant_hessian(),
            Kind::Mollified(m) => m
                .inner()
                .constant_hessian()
                .map(|a| a + Mat2::from_diagonal_element(m.mu())),
            Kind::Moreau(m) => m.inner().constant_hessian().map(|a| {
                let e = SymEigen2::new(&a);
                e.map(|l| l / (1.0 + m.delta() * l))
            }),
        }
    }

    /// Minimum point when known in closed form.
    pub fn known_argmin(&self) -> Option<Vec2> {
        match &self.0.kind {
            Kind::Power { .. }
            | Kind::AnisotropicQuadratic { .. }
            | Kind::Uhlenbeck { .. }
            | Kind::Finsler { .. }
            | Kind::Blend(_) => Some(Vec2::zeros()),
            Kind::Sum(_) | Kind::AffineAdd { .. } | Kind::Mollified(_) => None,
            Kind::Scaled { inner, .. } => inner.known_argmin(),
            Kind::Moreau(m) => m.inner().known_argmin(),
            Kind::Shifted { offset, inner } => inner.known_argmin().map(|x| x - offset),
        }
    }

    pub fn descriptor(&self) -> String {
        let base = match &self.0.kind {
            Kind::Power { p } => format!("power(p={p})"),
            Kind::AnisotropicQuadratic { a } => format!(
                "anisotropic_quadratic(a=[[{},{}],[{},{}]])",
                a[(0, 0)],
                a[(0, 1)],
                a[(1, 0)],
                a[(1, 1)]
            ),
            Kind::Uhlenbeck { profile } => format!("uhlenbeck({})", profile.descriptor()),
            Kind::Finsler { profile, b, c } => format!(
                "finsler({};b=[[{},{}],[{},{}]];c=[{},{}])",
                profile.descriptor(),
                b[(0, 0)],
                b[(0, 1)],
                b[(1, 0)],
                b[(1, 1)],
                c.x,
                c.y
            ),
            Kind::Blend(bl) => {
                let p = bl.params();
                format!("blend(p={},q={},w=[{},{}],eps={})", p.p, p.q, p.w.x, p.w.y, p.eps)
            }
            Kind::Sum(parts) => {
                let s: Vec<String> = parts.iter().map(|f| f.descriptor()).collect();
                format!("sum({})", s.join(";"))
            }
            Kind::Scaled { lambda, inner } => format!("scaled({lambda};{})", inner.descriptor()),
            Kind::Shifted { offset, inner } => {
                format!("shifted([{},{}];{})", offset.x, offset.y, inner.descriptor())
            }
            Kind::AffineAdd { slope, constant, inner } => {
                format!("affine_add([{},{}];{constant};{})", slope.x, slope.y, inner.descriptor())
            }
            Kind::Mollified(m) => format!("mollified(eps={},mu={};{})", m.epsilon(), m.mu(), m.inner().descriptor()),
            Kind::Moreau(m) => format!("moreau(delta={};{})", m.delta(), m.inner().descriptor()),
        };
        match self.0.mode {
            DerivativeMode::Analytic => base,
            DerivativeMode::FiniteDifference => format!("{base}[fd]"),
        }
    }
}

fn randers(b: &Mat2, c: &Vec2, z: &Vec2) -> f64 {
    z.dot(&(b * z)).max(0.0).sqrt() + c.dot(z)
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(invalid("p", "exponent must exceed 1"));
    }
    Ok(())
}

fn check_spd(name: &str, a: &Mat2) -> Result<()> {
    if !a.iter().all(|v| v.is_finite()) {
        return Err(invalid(name, "entries must be finite"));
    }
    let tol = 1e-12 * a.abs().max();
    if (a[(0, 1)] - a[(1, 0)]).abs() > tol {
        return Err(invalid(name, "matrix must be symmetric"));
    }
    if !(SymEigen2::new(a).lambda_min > 0.0) {
        return Err(invalid(name, "matrix must be positive definite"));
    }
    Ok(())
}

/// `|z|^p / p`.
pub fn make_power(p: f64) -> Result<Integrand> {
    check_exponent(p)?;
    Ok(Integrand::from_kind(Kind::Power { p }))
}

/// `(Az, z)/2` for symmetric positive definite `A`.
pub fn make_anisotropic_quadratic(a: Mat2) -> Result<Integrand> {
    check_spd("a", &a)?;
    Ok(Integrand::from_kind(Kind::AnisotropicQuadratic { a }))
}

/// `G(|z|)`, validated with the default ratio bound.
pub fn make_uhlenbeck(profile: RadialProfile) -> Result<Integrand> {
    make_uhlenbeck_with_bound(profile, DEFAULT_RATIO_BOUND)
}

pub fn make_uhlenbeck_with_bound(profile: RadialProfile, bound: f64) -> Result<Integrand> {
    profile.validate(bound)?;
    Ok(Integrand::from_kind(Kind::Uhlenbeck { profile }))
}

/// `G(√(zᵀBz) + (c, z))`; the gauge is positive away from 0 iff `cᵀB⁻¹c < 1`.
pub fn make_finsler(profile: RadialProfile, b: Mat2, c: Vec2) -> Result<Integrand> {
    profile.validate(DEFAULT_RATIO_BOUND)?;
    check_spd("b", &b)?;
    let binv = b.try_inverse().ok_or_else(|| invalid("b", "matrix must be invertible"))?;
    if !(c.dot(&(binv * c)) < 1.0) {
        return Err(invalid("c", "drift must satisfy (B⁻¹c, c) < 1"));
    }
    Ok(Integrand::from_kind(Kind::Finsler { profile, b, c }))
}

/// Cone operations on integrands.
#[derive(Debug, Clone)]
pub enum Combinator {
    Sum(Vec<Integrand>),
    Scaled { lambda: f64, inner: Integrand },
    Shifted { offset: Vec2, inner: Integrand },
    AffineAdd { slope: Vec2, constant: f64, inner: Integrand },
}

pub fn combine(op: Combinator) -> Result<Integrand> {
    let kind = match op {
        Combinator::Sum(parts) => {
            if parts.is_empty() {
                return Err(invalid("parts", "sum needs at least one part"));
            }
            Kind::Sum(parts)
        }
        Combinator::Scaled { lambda, inner } => {
            if !(lambda > 0.0) || !lambda.is_finite() {
                return Err(invalid("lambda", "scale must be positive"));
            }
            Kind::Scaled { lambda, inner }
        }
        Combinator::Shifted { offset, inner } => {
            if !offset.iter().all(|v| v.is_finite()) {
                return Err(invalid("offset", "must be finite"));
            }
            Kind::Shifted { offset, inner }
        }
        Combinator::AffineAdd { slope, constant, inner } => {
            if !slope.iter().all(|v| v.is_finite()) || !constant.is_finite() {
                return Err(invalid("slope", "affine part must be finite"));
            }
            Kind::AffineAdd { slope, constant, inner }
        }
    };
    Ok(Integrand::from_kind(kind))
}
