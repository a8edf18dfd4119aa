use crate::error::{invalid, Result};

/// Distortion function `η_{a,b}(t) = max{t^a, t^b}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaProfile {
    pub a: f64,
    pub b: f64,
}

impl EtaProfile {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(invalid("eta", "exponents must be positive and finite"));
        }
        Ok(Self { a, b })
    }

    /// `η_H = η_{H, 1/H}`.
    pub fn h(h: f64) -> Self {
        Self { a: h, b: 1.0 / h }
    }

    /// Exponents sorted as `(larger, smaller)`; `η` does not depend on order.
    pub fn ordered(&self) -> (f64, f64) {
        (self.a.max(self.b), self.a.min(self.b))
    }

    /// `η_{1/a, 1/b}`.
    pub fn reciprocal(&self) -> Self {
        Self { a: 1.0 / self.a, b: 1.0 / self.b }
    }

    pub fn eta(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let (hi, lo) = self.ordered();
        if t >= 1.0 {
            t.powf(hi)
        } else {
            t.powf(lo)
        }
    }

    /// `η⁻¹(t) = min{t^{1/a}, t^{1/b}}`.
    pub fn eta_inv(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let (hi, lo) = self.ordered();
        if t >= 1.0 {
            t.powf(1.0 / hi)
        } else {
            t.powf(1.0 / lo)
        }
    }

    /// `η_{a,b} ∘ η_{c,d} = η_{ac, bd}` with both pairs ordered.
    pub fn compose(&self, inner: &EtaProfile) -> EtaProfile {
        let (a, b) = self.ordered();
        let (c, d) = inner.ordered();
        EtaProfile { a: a * c, b: b * d }
    }
}

/// Outcome of [`eta_identities_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct EtaIdentityReport {
    pub samples: usize,
    /// Largest relative excess in `η(st) ≤ η(s)η(t)` and `η⁻¹(st) ≥ η⁻¹(s)η⁻¹(t)`.
    pub submultiplicative_excess: f64,
    /// Largest `|η⁻¹(t)·η_{1/a,1/b}(1/t) − 1|`.
    pub reflection_error: f64,
    /// Largest relative error of composition against the closed form, over
    /// composition with itself and with its reciprocal.
    pub composition_error: f64,
    pub first_violation: Option<String>,
}

impl EtaIdentityReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Checks submultiplicativity, the reflection identity and composition on
/// `(s, t)` pairs, each to relative tolerance `tol`.
pub fn eta_identities_check(profile: &EtaProfile, samples: &[(f64, f64)], tol: f64) -> EtaIdentityReport {
    let mut rep = EtaIdentityReport {
        samples: samples.len(),
        submultiplicative_excess: 0.0,
        reflection_error: 0.0,
        composition_error: 0.0,
        first_violation: None,
    };
    let refl = profile.reciprocal();
    let partners = [*profile, profile.reciprocal()];
    let note = |rep: &mut EtaIdentityReport, msg: String| {
        if rep.first_violation.is_none() {
            rep.first_violation = Some(msg);
        }
    };
    for &(s, t) in samples {
        let e = profile.eta(s * t) / (profile.eta(s) * profile.eta(t)) - 1.0;
        let ei = 1.0 - profile.eta_inv(s * t) / (profile.eta_inv(s) * profile.eta_inv(t));
        let sub = e.max(ei);
        rep.submultiplicative_excess = rep.submultiplicative_excess.max(sub);
        if sub > tol {
            note(&mut rep, format!("submultiplicativity fails at s={s}, t={t} (excess {sub:e})"));
        }
        for x in [s, t] {
            let r = (profile.eta_inv(x) * refl.eta(1.0 / x) - 1.0).abs();
            rep.reflection_error = rep.reflection_error.max(r);
            if r > tol {
                note(&mut rep, format!("reflection fails at t={x} (error {r:e})"));
            }
        }
        for inner in &partners {
            let closed = profile.compose(inner);
            let lhs = profile.eta(inner.eta(t));
            let c = (lhs / closed.eta(t) - 1.0).abs();
            rep.composition_error = rep.composition_error.max(c);
            if c > tol {
                note(&mut rep, format!("composition with ({}, {}) fails at t={t} (error {c:e})", inner.a, inner.b));
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let e = EtaProfile::new(2.0, 0.5).unwrap();
        assert_eq!(e.eta(4.0), 16.0);
        assert_eq!(e.eta_inv(16.0), 4.0);
        assert_eq!(e.eta(1.0), 1.0);
        assert_eq!(e.eta(0.0), 0.0);
        assert_eq!(e.eta_inv(0.0), 0.0);
        let r = e.eta_inv(5.0) * e.reciprocal().eta(0.2);
        assert!((r - 1.0).abs() < 1e-15);
        let h3 = EtaProfile::h(3.0);
        assert_eq!(h3.eta(4.0), h3.eta(2.0) * h3.eta(2.0));
    }

    #[test]
    fn composition_example() {
        let outer = EtaProfile::new(2.0, 1.0).unwrap();
        let inner = EtaProfile::new(3.0, 2.0).unwrap();
        let c = outer.compose(&inner);
        assert_eq!((c.a, c.b), (6.0, 2.0));
        assert_eq!(outer.eta(inner.eta(2.0)), 64.0);
        assert_eq!(c.eta(2.0), 64.0);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(EtaProfile::new(0.0, 1.0).is_err());
    }
}
