use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::integrand::Integrand;
use crate::linalg::{SymEigen2, Vec2};

use super::EtaProfile;

/// `δ = 2√H/(H+1)`.
pub fn delta_from_h(h: f64) -> Result<f64> {
    if !(h >= 1.0) || !h.is_finite() {
        return Err(invalid("H", "must be a finite number ≥ 1"));
    }
    Ok(2.0 * h.sqrt() / (h + 1.0))
}

/// `H = (1+s)/(1−s)` with `s = √(1−δ²)`, evaluated as `(1+s)²/δ²` to avoid
/// the cancellation in `1 − s`.
pub fn h_from_delta(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid("delta", "must lie in (0, 1]"));
    }
    let s = ((1.0 - delta) * (1.0 + delta)).sqrt();
    Ok((1.0 + s) * (1.0 + s) / (delta * delta))
}

/// Result of a dilatation measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct DilatationEstimate {
    pub h_est: f64,
    pub delta_est: f64,
    /// Where the extreme value was attained (first point of a pair).
    pub worst_point: Vec2,
    pub samples: usize,
    /// Non-finite or degenerate samples left out.
    pub skipped: usize,
}

/// Points at which Hessians are sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub radii: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub angles: usize,
    pub random_points: usize,
    pub random_radius: f64,
    /// Radius of the balls around singular points that are left out.
    pub exclusion: f64,
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self {
            radii: 64,
            r_min: 1e-3,
            r_max: 1e3,
            angles: 128,
            random_points: 10_000,
            random_radius: 10.0,
            exclusion: 1e-8,
            seed: 0,
        }
    }
}

impl SamplingPlan {
    /// Log-radial × angular grids around the origin and every singular point,
    /// then uniform points in a ball.
    pub fn points(&self, f: &Integrand) -> Vec<Vec2> {
        let sing = f.singular_points();
        let mut centres = vec![Vec2::zeros()];
        centres.extend(sing.iter().copied().filter(|c| c.norm() > 0.0));
        let mut pts = Vec::with_capacity(centres.len() * self.radii * self.angles + self.random_points);
        let lr = (self.r_max / self.r_min).ln();
        for c in &centres {
            for i in 0..self.radii {
                let r = self.r_min * (lr * i as f64 / (self.radii.max(2) - 1) as f64).exp();
                for k in 0..self.angles {
                    let th = 2.0 * PI * (k as f64 + 0.5) / self.angles as f64;
                    pts.push(c + r * Vec2::new(th.cos(), th.sin()));
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        pts.extend((0..self.random_points).map(|_| uniform_in_ball(&mut rng, self.random_radius)));
        pts.retain(|p| sing.iter().all(|s| (p - s).norm() > self.exclusion));
        pts
    }
}

pub(crate) fn uniform_in_ball(rng: &mut impl Rng, radius: f64) -> Vec2 {
    let r = radius * rng.random::<f64>().sqrt();
    let th = 2.0 * PI * rng.random::<f64>();
    Vec2::new(r * th.cos(), r * th.sin())
}

/// Largest of `values` with its index; ties keep the first, so the result
/// does not depend on evaluation order.
fn first_max(values: &[Option<f64>]) -> (f64, usize, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut at = 0;
    let mut skipped = 0;
    for (i, v) in values.iter().enumerate() {
        match v {
            Some(v) if *v > best => {
                best = *v;
                at = i;
            }
            Some(_) => {}
            None => skipped += 1,
        }
    }
    (best, at, skipped)
}

/// Hessian eigenvalue ratio at one point; `None` for non-finite or zero Hessians.
pub fn ellipticity_ratio(f: &Integrand, z: &Vec2) -> Option<f64> {
    let h = f.hess(z);
    if !h.iter().all(|v| v.is_finite()) {
        return None;
    }
    let e = SymEigen2::new(&h);
    if e.lambda_max <= 0.0 && e.lambda_min >= 0.0 {
        return None;
    }
    if e.lambda_min <= 0.0 {
        return Some(f64::INFINITY);
    }
    Some(e.lambda_max / e.lambda_min)
}

/// `H_est = max λ_max/λ_min` over the plan's points.
pub fn estimate_h(f: &Integrand, plan: &SamplingPlan) -> DilatationEstimate {
    let pts = plan.points(f);
    estimate_h_at(f, &pts)
}

pub fn estimate_h_at(f: &Integrand, pts: &[Vec2]) -> DilatationEstimate {
    let ratios: Vec<Option<f64>> = pts.par_iter().map(|z| ellipticity_ratio(f, z)).collect();
    let (h, at, skipped) = first_max(&ratios);
    let h_est = if h.is_finite() { h.max(1.0) } else { h };
    DilatationEstimate {
        h_est,
        delta_est: if h_est.is_finite() { 2.0 * h_est.sqrt() / (h_est + 1.0) } else { 0.0 },
        worst_point: pts.get(at).copied().unwrap_or_else(Vec2::zeros),
        samples: pts.len(),
        skipped,
    }
}

/// `(DF(z)−DF(w), z−w) / (|DF(z)−DF(w)||z−w|)`.
pub fn monotonicity_quotient(f: &Integrand, z: &Vec2, w: &Vec2) -> Option<f64> {
    let dz = z - w;
    let dg = f.grad(z) - f.grad(w);
    let den = dg.norm() * dz.norm();
    if !(den > 0.0) || !den.is_finite() {
        return None;
    }
    Some(dg.dot(&dz) / den)
}

/// Random pairs: `z` uniform in `B_10`, `w = z + offset` with log-uniform
/// length in `[1e-4, 10]`. For a constant Hessian the sharp pair built from
/// its eigenvectors is added.
pub fn delta_pairs(f: &Integrand, n: usize, seed: u64) -> Vec<(Vec2, Vec2)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(Vec2, Vec2)> = (0..n)
        .map(|_| {
            let z = uniform_in_ball(&mut rng, 10.0);
            let len = 10f64.powf(rng.random_range(-4.0..1.0));
            let th = 2.0 * PI * rng.random::<f64>();
            (z, z + len * Vec2::new(th.cos(), th.sin()))
        })
        .collect();
    if let Some(v) = sharp_direction(f) {
        pairs.push((v, Vec2::zeros()));
    }
    let sing = f.singular_points();
    pairs.retain(|(z, w)| sing.iter().all(|s| (z - s).norm() > 1e-8 && (w - s).norm() > 1e-8));
    pairs
}

/// `v = √(λ_N/(λ₁+λ_N))·e₁ + √(λ₁/(λ₁+λ_N))·e_N` for a constant Hessian.
pub fn sharp_direction(f: &Integrand) -> Option<Vec2> {
    let a = f.constant_hessian()?;
    let e = SymEigen2::new(&a);
    let s = e.lambda_min + e.lambda_max;
    Some((e.lambda_max / s).sqrt() * e.v_min + (e.lambda_min / s).sqrt() * e.v_max)
}

/// `δ_est = min` quotient over the pairs, with `H_est` from the inverse relation.
pub fn measure_delta_monotonicity(f: &Integrand, pairs: &[(Vec2, Vec2)]) -> DilatationEstimate {
    let qs: Vec<Option<f64>> =
        pairs.par_iter().map(|(z, w)| monotonicity_quotient(f, z, w).map(|q| -q)).collect();
    let (neg, at, skipped) = first_max(&qs);
    let delta_est = (-neg).min(1.0);
    DilatationEstimate {
        h_est: h_from_delta(delta_est).unwrap_or(f64::INFINITY),
        delta_est,
        worst_point: pairs.get(at).map(|p| p.0).unwrap_or_else(Vec2::zeros),
        samples: pairs.len(),
        skipped,
    }
}

/// Brute-force infimum of `(Σλᵢvᵢ²)/(√(Σλᵢ²vᵢ²)|v|)` over unit vectors, followed
/// by a coordinate pattern search from the best sample.
pub fn cassels_oracle(lambda: &[f64], trials: usize, seed: u64) -> Result<f64> {
    if lambda.is_empty() {
        return Err(invalid("lambda", "eigenvalue list is empty"));
    }
    if !lambda.iter().all(|l| *l > 0.0 && l.is_finite()) {
        return Err(invalid("lambda", "eigenvalues must be positive"));
    }
    let n = lambda.len();
    let q = |v: &[f64]| {
        let nv: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let num: f64 = lambda.iter().zip(v).map(|(l, x)| l * x * x).sum();
        let den: f64 = lambda.iter().zip(v).map(|(l, x)| l * l * x * x).sum::<f64>().sqrt();
        num / (den * nv)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = vec![1.0; n];
    let mut best_q = q(&best);
    for _ in 0..trials {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if v.iter().all(|x| *x == 0.0) {
            continue;
        }
        let qv = q(&v);
        if qv < best_q {
            best_q = qv;
            best = v;
        }
    }
    let mut step = 0.1;
    while step > 1e-10 {
        let mut improved = false;
        for i in 0..n {
            for sgn in [1.0, -1.0] {
                let mut v = best.clone();
                v[i] += sgn * step;
                let qv = q(&v);
                if qv < best_q {
                    best_q = qv;
                    best = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(best_q)
}

/// `2√(λ₁λ_N)/(λ₁+λ_N)` for the extreme eigenvalues.
pub fn cassels_bound(lambda: &[f64]) -> f64 {
    let lo = lambda.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lambda.iter().copied().fold(0.0, f64::max);
    2.0 * (lo * hi).sqrt() / (lo + hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasisymmetryReport {
    /// `max |DF(z)−DF(z₀)| / (|DF(w)−DF(z₀)| η_H(|z−z₀|/|w−z₀|))`.
    pub empirical_c: f64,
    pub worst: (Vec2, Vec2, Vec2),
    pub samples: usize,
    pub skipped: usize,
}

/// Triples `(z₀, z, w)` with all points uniform in `B_radius`.
pub fn random_triples(n: usize, radius: f64, seed: u64) -> Vec<(Vec2, Vec2, Vec2)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            (
                uniform_in_ball(&mut rng, radius),
                uniform_in_ball(&mut rng, radius),
                uniform_in_ball(&mut rng, radius),
            )
        })
        .collect()
}

pub fn quasisymmetry_check(f: &Integrand, triples: &[(Vec2, Vec2, Vec2)], h: f64) -> QuasisymmetryReport {
    let eta = EtaProfile::h(h);
    let vals: Vec<Option<f64>> = triples
        .par_iter()
        .map(|(z0, z, w)| {
            let g0 = f.grad(z0);
            let num = (f.grad(z) - g0).norm();
            let den = (f.grad(w) - g0).norm();
            let dw = (w - z0).norm();
            if !(den > 0.0 && dw > 0.0) || !num.is_finite() || !den.is_finite() {
                return None;
            }
            Some(num / den / eta.eta((z - z0).norm() / dw))
        })
        .collect();
    let (c, at, skipped) = first_max(&vals);
    QuasisymmetryReport {
        empirical_c: c,
        worst: triples.get(at).copied().unwrap_or((Vec2::zeros(), Vec2::zeros(), Vec2::zeros())),
        samples: triples.len(),
        skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrand::{make_anisotropic_quadratic, make_power};
    use crate::linalg::Mat2;
    use approx::assert_relative_eq;

    #[test]
    fn delta_h_examples() {
        assert_eq!(delta_from_h(1.0).unwrap(), 1.0);
        assert_eq!(h_from_delta(1.0).unwrap(), 1.0);
        assert_relative_eq!(delta_from_h(4.0).unwrap(), 0.8, epsilon = 1e-15);
        assert_relative_eq!(h_from_delta(0.8).unwrap(), 4.0, epsilon = 1e-14);
        assert!(delta_from_h(0.5).is_err());
        assert!(h_from_delta(0.0).is_err());
    }

    #[test]
    fn constant_hessian_is_exact() {
        let f = make_anisotropic_quadratic(Mat2::new(1.6, 0.0, 0.0, 0.4)).unwrap();
        let plan = SamplingPlan { random_points: 100, radii: 4, angles: 8, ..Default::default() };
        assert_eq!(estimate_h(&f, &plan).h_est, 4.0);
        let v = sharp_direction(&f).unwrap();
        assert_relative_eq!(monotonicity_quotient(&f, &v, &Vec2::zeros()).unwrap(), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn power_three_ratio() {
        let f = make_power(3.0).unwrap();
        let plan = SamplingPlan { random_points: 500, radii: 8, angles: 16, ..Default::default() };
        let est = estimate_h(&f, &plan);
        assert!((est.h_est - 2.0).abs() < 0.04, "{est:?}");
        let pairs = delta_pairs(&f, 2000, 1);
        let d = measure_delta_monotonicity(&f, &pairs);
        assert!(d.delta_est >= 2.0 * 2f64.sqrt() / 3.0 - 1e-6);
    }

    #[test]
    fn cassels_examples() {
        assert_relative_eq!(cassels_oracle(&[1.0, 1.0], 100, 0).unwrap(), 1.0, epsilon = 1e-12);
        let c = cassels_oracle(&[1.0, 4.0], 1000, 0).unwrap();
        assert!((0.8 - 1e-9..=0.8 + 1e-3).contains(&c));
        let c = cassels_oracle(&[1.0, 2.0, 4.0], 5000, 0).unwrap();
        assert!((0.8 - 1e-9..=0.8 + 1e-3).contains(&c));
        assert!(cassels_oracle(&[], 10, 0).is_err());
    }

    #[test]
    fn quasisymmetry_examples() {
        let id = make_power(2.0).unwrap();
        let t = random_triples(500, 3.0, 2);
        assert_relative_eq!(quasisymmetry_check(&id, &t, 1.0).empirical_c, 1.0, epsilon = 1e-9);
        let f = make_power(3.0).unwrap();
        let one = [(Vec2::zeros(), Vec2::new(2.0, 0.0), Vec2::new(0.0, 1.0))];
        assert_relative_eq!(quasisymmetry_check(&f, &one, 2.0).empirical_c, 1.0, epsilon = 1e-12);
    }
}
