use std::f64::consts::PI;

use crate::linalg::Vec2;
use crate::qc_analysis::EtaProfile;

use super::Integrand;

/// Tabulated `a(t) = sup_{|z|≤t} |DF(z)|` and its antiderivative `A`.
///
/// Between table radii `a` is taken as a local power law, so `A` is exact
/// whenever `a` is a power of `t`.
#[derive(Debug, Clone)]
pub struct IsotropicEnvelope {
    pub radii: Vec<f64>,
    pub a: Vec<f64>,
    pub big_a: Vec<f64>,
    /// Local exponent of `a` on each segment (one more entry than segments:
    /// the first applies below the table).
    exponents: Vec<f64>,
    pub angles: usize,
}

/// Envelope on `radii` log-spaced radii in `[1e-4, 1e4]` with `angles`
/// directions per circle.
pub fn isotropic_envelope(f: &Integrand, radii: usize, angles: usize) -> IsotropicEnvelope {
    assert!(radii >= 2 && angles >= 1);
    let ts: Vec<f64> = (0..radii).map(|i| 10f64.powf(-4.0 + 8.0 * i as f64 / (radii - 1) as f64)).collect();
    let mut a = Vec::with_capacity(radii);
    let mut running: f64 = 0.0;
    for &t in &ts {
        let m = (0..angles)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / angles as f64;
                f.grad(&Vec2::new(t * th.cos(), t * th.sin())).norm()
            })
            .fold(0.0, f64::max);
        running = running.max(m);
        a.push(running);
    }
    let local = |j: usize| {
        let s = (a[j + 1] / a[j]).ln() / (ts[j + 1] / ts[j]).ln();
        if s.is_finite() {
            s
        } else {
            1.0
        }
    };
    let mut exponents = vec![local(0)];
    exponents.extend((0..radii - 1).map(local));
    let mut big_a = Vec::with_capacity(radii);
    big_a.push(a[0] * ts[0] / (exponents[0] + 1.0));
    for j in 0..radii - 1 {
        let inc = (a[j + 1] * ts[j + 1] - a[j] * ts[j]) / (exponents[j + 1] + 1.0);
        big_a.push(big_a[j] + inc);
    }
    IsotropicEnvelope { radii: ts, a, big_a, exponents, angles }
}

impl IsotropicEnvelope {
    fn segment(&self, t: f64) -> Option<usize> {
        if t < self.radii[0] {
            return None;
        }
        let j = self.radii.partition_point(|&r| r <= t);
        Some(j.saturating_sub(1).min(self.radii.len() - 2))
    }

    pub fn a_at(&self, t: f64) -> f64 {
        match self.segment(t) {
            None => self.a[0] * (t / self.radii[0]).powf(self.exponents[0]),
            Some(j) => self.a[j] * (t / self.radii[j]).powf(self.exponents[j + 1]),
        }
    }

    pub fn big_a_at(&self, t: f64) -> f64 {
        match self.segment(t) {
            None => self.a_at(t) * t / (self.exponents[0] + 1.0),
            Some(j) => self.big_a[j] + (self.a_at(t) * t - self.a[j] * self.radii[j]) / (self.exponents[j + 1] + 1.0),
        }
    }

    /// Conjugate `A*(s) = sup_t (st − A(t))`, maximised over the table radii.
    pub fn a_star(&self, s: f64) -> f64 {
        self.radii.iter().zip(&self.big_a).map(|(t, a)| s * t - a).fold(0.0, f64::max)
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.a.windows(2).all(|w| w[1] > w[0])
    }

    /// Slopes of the chords of `A` between table radii are nondecreasing.
    pub fn is_convex(&self) -> bool {
        let slopes: Vec<f64> = (0..self.radii.len() - 1)
            .map(|j| (self.big_a[j + 1] - self.big_a[j]) / (self.radii[j + 1] - self.radii[j]))
            .collect();
        slopes.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12))
    }

    /// Smallest `C` with `A(|z|)/C ≤ F(z) ≤ C·A(|z|)` on the given points.
    pub fn empirical_constant(&self, f: &Integrand, points: &[Vec2]) -> f64 {
        points
            .iter()
            .filter(|z| z.norm() > 0.0)
            .map(|z| {
                let r = f.eval(z) / self.big_a_at(z.norm());
                r.max(1.0 / r)
            })
            .fold(1.0, f64::max)
    }

    /// `max_t a(2t) / (a(t)·η_H(2))` over table radii with `2t` in range.
    pub fn doubling_ratio(&self, h: f64) -> f64 {
        let eta2 = EtaProfile::h(h).eta(2.0);
        let tmax = *self.radii.last().expect("nonempty table");
        self.radii
            .iter()
            .filter(|&&t| 2.0 * t <= tmax)
            .map(|&t| self.a_at(2.0 * t) / (self.a_at(t) * eta2))
            .fold(0.0, f64::max)
    }
}
