//! Smooth, strongly elliptic approximants: Moreau–Yosida envelopes and
//! mollification plus a small quadratic.

mod mollify;
mod moreau;

pub use mollify::{bump, mollify_plus_quadratic, mollify_with, Mollified, MollifierSpec, BUMP_NORMALISATION};
pub use moreau::{moreau_yosida, moreau_yosida_with_cache, MoreauYosida, ProxCache};

use crate::error::{invalid, Result};
use crate::integrand::Integrand;

/// `δ_n = ε_n = μ_n = 2^{-n}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub delta: f64,
    pub epsilon: f64,
    pub mu: f64,
}

impl Schedule {
    pub fn dyadic(n: u32) -> Self {
        let s = 0.5f64.powi(n as i32);
        Self { delta: s, epsilon: s, mu: s }
    }
}

/// `(F_{δ_n} * φ_{ε_n}) + (μ_n/2)|z|²` on the dyadic schedule.
pub fn strongly_elliptic_approx(f: &Integrand, n: u32) -> Result<Integrand> {
    if n < 1 {
        return Err(invalid("n", "index must be at least 1"));
    }
    strongly_elliptic_approx_with(f, Schedule::dyadic(n))
}

pub fn strongly_elliptic_approx_with(f: &Integrand, s: Schedule) -> Result<Integrand> {
    let smooth = moreau_yosida(f, s.delta)?;
    mollify_plus_quadratic(&smooth, s.epsilon, s.mu)
}
