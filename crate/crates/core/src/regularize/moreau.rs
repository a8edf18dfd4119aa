use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use parking_lot::RwLock;

use crate::error::{invalid, QucError, Result};
use crate::integrand::{Integrand, Kind};
use crate::linalg::{Mat2, SymEigen2, Vec2};
use crate::optim::{minimise, MinimiseOptions, Objective2};

const CACHE_CAPACITY: usize = 256;

/// Recently computed proximal points. Readers share the lock; insertion
/// takes it exclusively.
#[derive(Default)]
pub struct ProxCache {
    entries: RwLock<VecDeque<(Vec2, Vec2)>>,
}

impl ProxCache {
    fn lookup(&self, z: &Vec2) -> (Option<Vec2>, Option<Vec2>) {
        let e = self.entries.read();
        let mut nearest: Option<(f64, Vec2)> = None;
        for (q, p) in e.iter() {
            let d = (q - z).norm_squared();
            if d == 0.0 {
                return (Some(*p), None);
            }
            if nearest.is_none_or(|(best, _)| d < best) {
                nearest = Some((d, *p));
            }
        }
        (None, nearest.map(|n| n.1))
    }

    fn insert(&self, z: Vec2, p: Vec2) {
        let mut e = self.entries.write();
        if e.len() >= CACHE_CAPACITY {
            e.pop_front();
        }
        e.push_back((z, p));
    }

    pub fn len(&self) -> usize {
        self.entries.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `F_δ(z) = inf_w F(w) + |w − z|²/(2δ)`.
pub struct MoreauYosida {
    inner: Integrand,
    delta: f64,
    cache: Option<Arc<ProxCache>>,
}

impl fmt::Debug for MoreauYosida {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MoreauYosida")
            .field("inner", &self.inner)
            .field("delta", &self.delta)
            .field("cached", &self.cache.is_some())
            .finish()
    }
}

struct ProxObjective<'a> {
    f: &'a Integrand,
    z: Vec2,
    delta: f64,
}

impl Objective2 for ProxObjective<'_> {
    fn value(&self, w: &Vec2) -> f64 {
        self.f.eval(w) + (w - self.z).norm_squared() / (2.0 * self.delta)
    }
    fn grad(&self, w: &Vec2) -> Vec2 {
        self.f.grad(w) + (w - self.z) / self.delta
    }
    fn hess(&self, w: &Vec2) -> Mat2 {
        self.f.hess(w) + Mat2::from_diagonal_element(1.0 / self.delta)
    }
}

impl MoreauYosida {
    pub fn inner(&self) -> &Integrand {
        &self.inner
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn cache(&self) -> Option<&ProxCache> {
        self.cache.as_deref()
    }

    pub(crate) fn clone_fresh(&self) -> Self {
        Self {
            inner: self.inner.clone(),
            delta: self.delta,
            cache: self.cache.as_ref().map(|_| Arc::default()),
        }
    }

    /// Proximal point, or an error carrying the final gradient residual.
    pub fn prox_checked(&self, z: &Vec2) -> Result<Vec2> {
        let (hit, warm) = match &self.cache {
            Some(c) => c.lookup(z),
            None => (None, None),
        };
        if let Some(p) = hit {
            return Ok(p);
        }
        let obj = ProxObjective { f: &self.inner, z: *z, delta: self.delta };
        let start = match warm {
            Some(w) if obj.value(&w) < obj.value(z) => w,
            _ => *z,
        };
        let tol = 1e-11 * (1.0 + z.norm() / self.delta);
        let m = minimise(&obj, start, &MinimiseOptions { max_iter: 200, grad_tol: tol });
        if !m.converged {
            return Err(QucError::NonConvergence {
                context: format!("proximal point at ({}, {})", z.x, z.y),
                iterations: m.iterations,
                residual: m.grad_norm,
            });
        }
        if let Some(c) = &self.cache {
            c.insert(*z, m.x);
        }
        Ok(m.x)
    }

    /// Proximal point; on non-convergence the best iterate is used.
    pub fn prox(&self, z: &Vec2) -> Vec2 {
        match self.prox_checked(z) {
            Ok(p) => p,
            Err(_) => {
                let obj = ProxObjective { f: &self.inner, z: *z, delta: self.delta };
                minimise(&obj, *z, &MinimiseOptions { max_iter: 1000, grad_tol: 0.0 }).x
            }
        }
    }

    pub(crate) fn eval(&self, z: &Vec2) -> f64 {
        let p = self.prox(z);
        self.inner.eval(&p) + (p - z).norm_squared() / (2.0 * self.delta)
    }

    pub(crate) fn grad(&self, z: &Vec2) -> Vec2 {
        (z - self.prox(z)) / self.delta
    }

    /// `D²F(p)(I + δD²F(p))⁻¹`, eigenvalue-wise `λ/(1+δλ)`.
    pub(crate) fn hess(&self, z: &Vec2) -> Mat2 {
        let a = self.inner.hess(&self.prox(z));
        if !a.iter().all(|v| v.is_finite()) {
            return Mat2::from_diagonal_element(1.0 / self.delta);
        }
        SymEigen2::new(&a).map(|l| l / (1.0 + self.delta * l))
    }
}

pub fn moreau_yosida(f: &Integrand, delta: f64) -> Result<Integrand> {
    moreau_yosida_with_cache(f, delta, true)
}

pub fn moreau_yosida_with_cache(f: &Integrand, delta: f64, cached: bool) -> Result<Integrand> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(invalid("delta", "regularisation parameter must be positive"));
    }
    let cache = cached.then(Arc::default);
    Ok(Integrand::from_kind(Kind::Moreau(MoreauYosida { inner: f.clone(), delta, cache })))
}
