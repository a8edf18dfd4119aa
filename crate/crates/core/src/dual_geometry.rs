//! Inverse gradient map, `G = F ∘ DF⁻¹` and the Minkowski gauges of its
//! sublevel sets.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{invalid, QucError, Result};
use crate::integrand::Integrand;
use crate::linalg::{Mat2, Vec2};
use crate::optim::{minimise, MinimiseOptions, Objective2};

struct Dual<'a> {
    f: &'a Integrand,
    y: Vec2,
}

impl Objective2 for Dual<'_> {
    fn value(&self, w: &Vec2) -> f64 {
        self.f.eval(w) - self.y.dot(w)
    }
    fn grad(&self, w: &Vec2) -> Vec2 {
        self.f.grad(w) - self.y
    }
    fn hess(&self, w: &Vec2) -> Mat2 {
        self.f.hess(w)
    }
}

/// `w` with `DF(w) = y`, as the minimiser of `F(w) − (y, w)`, to
/// `|DF(w) − y| ≤ 1e-10·(1+|y|)`.
pub fn df_inverse(f: &Integrand, y: &Vec2) -> Result<Vec2> {
    if *y == Vec2::zeros() {
        if let Some(z) = f.known_argmin() {
            return Ok(z);
        }
    }
    let tol = 1e-10 * (1.0 + y.norm());
    let m = minimise(&Dual { f, y: *y }, Vec2::zeros(), &MinimiseOptions { max_iter: 500, grad_tol: tol });
    if !m.converged {
        return Err(QucError::NonConvergence {
            context: format!("gradient inversion at ({}, {})", y.x, y.y),
            iterations: m.iterations,
            residual: m.grad_norm,
        });
    }
    Ok(m.x)
}

/// `G(y) = F(DF⁻¹(y))`.
pub fn g_eval(f: &Integrand, y: &Vec2) -> Result<f64> {
    Ok(f.eval(&df_inverse(f, y)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarShapeReport {
    /// Smallest `(G(t_{j+1} e) − G(t_j e)) / (1 + G(t_j e))` over rays and radii.
    pub min_margin: f64,
    pub worst: Option<(Vec2, f64)>,
    pub rays: usize,
    pub radii: usize,
}

impl StarShapeReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.min_margin >= -tol
    }
}

/// Smallest margin on one ray and where it occurred.
type RayMargin = (f64, Option<(Vec2, f64)>);

/// Checks that `t ↦ G(t e)` is nondecreasing along every ray.
pub fn star_shape_check(f: &Integrand, directions: &[Vec2], radii: &[f64]) -> Result<StarShapeReport> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("radii", "must be strictly increasing"));
    }
    let per_ray: Vec<Result<RayMargin>> = directions
        .par_iter()
        .map(|e| {
            let mut worst = (f64::INFINITY, None);
            let mut prev = g_eval(f, &(radii[0] * e))?;
            for w in radii.windows(2) {
                let g = g_eval(f, &(w[1] * e))?;
                let m = (g - prev) / (1.0 + prev.abs());
                if m < worst.0 {
                    worst = (m, Some((*e, w[1])));
                }
                prev = g;
            }
            Ok(worst)
        })
        .collect();
    let mut rep = StarShapeReport { min_margin: f64::INFINITY, worst: None, rays: directions.len(), radii: radii.len() };
    for r in per_ray {
        let (m, at) = r?;
        if m < rep.min_margin {
            rep.min_margin = m;
            rep.worst = at;
        }
    }
    Ok(rep)
}

/// `g_k(z) = inf{t > 0 : G(z/t) < k}`, the root of the decreasing map
/// `t ↦ G(z/t) − k`, bracketed from `t = |z|` by doubling and then bisected in
/// `log t` to relative width `1e-12`.
pub fn gauge(f: &Integrand, k: f64, z: &Vec2) -> Result<f64> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(invalid("k", "level must be positive"));
    }
    let r = z.norm();
    if r == 0.0 {
        return Ok(0.0);
    }
    let phi = |t: f64| g_eval(f, &(z / t)).map(|g| g - k);
    let mut lo = r;
    let mut hi = r;
    let mut v = phi(r)?;
    let mut steps = 0;
    if v > 0.0 {
        while v > 0.0 {
            lo = hi;
            hi *= 2.0;
            v = phi(hi)?;
            steps += 1;
            if steps > 2000 {
                return Err(QucError::Bracket { context: format!("gauge at level {k}") });
            }
        }
    } else {
        while v <= 0.0 {
            hi = lo;
            lo *= 0.5;
            v = phi(lo)?;
            steps += 1;
            if steps > 2000 || lo == 0.0 {
                return Err(QucError::Bracket { context: format!("gauge at level {k}") });
            }
        }
    }
    // phi(lo) > 0 ≥ phi(hi)
    while hi / lo - 1.0 > 1e-12 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Lower bound on `inf_{G ≥ k} (g_h − 1)` for `h < k ≤ 2h`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelGap {
    pub h: f64,
    pub k: f64,
    /// `min_e g_h(e)/g_k(e) − 1`.
    pub measured: f64,
    /// `min{x^H, x^{1/(H(H+1))}}` with `x = (k−h)/h`.
    pub profile: f64,
    /// Smallest `C` with `measured ≥ profile / C`.
    pub empirical_c: f64,
}

/// Angular table of `g_k` on the unit circle with its bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeSample {
    pub k: f64,
    pub angles: Vec<f64>,
    pub values: Vec<f64>,
    pub sup: f64,
    pub inf: f64,
    /// Largest chord slope between neighbouring table points, or `sup` when
    /// larger (radial slope of a 1-homogeneous function).
    pub lipschitz: f64,
    /// `1.1·H·sup g_k`.
    pub lipschitz_bound: f64,
    pub gap: Option<LevelGap>,
}

impl GaugeSample {
    pub fn sup_inf_ratio(&self) -> f64 {
        self.sup / self.inf
    }

    pub fn lipschitz_ok(&self) -> bool {
        self.lipschitz <= self.lipschitz_bound
    }
}

fn table(f: &Integrand, k: f64, angles: &[f64]) -> Result<Vec<f64>> {
    angles.par_iter().map(|th| gauge(f, k, &Vec2::new(th.cos(), th.sin()))).collect()
}

/// Tabulates `g_k` on `n` angles and, if `h` is given, measures the level gap
/// between `g_h` and `g_k`.
pub fn gauge_bounds(f: &Integrand, k: f64, h_est: f64, n: usize, h: Option<f64>) -> Result<GaugeSample> {
    if n < 3 {
        return Err(invalid("angles", "need at least three angles"));
    }
    let angles: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
    let values = table(f, k, &angles)?;
    let sup = values.iter().copied().fold(0.0, f64::max);
    let inf = values.iter().copied().fold(f64::INFINITY, f64::min);
    let chord = 2.0 * (PI / n as f64).sin();
    let tangential = (0..n)
        .map(|i| (values[(i + 1) % n] - values[i]).abs() / chord)
        .fold(0.0, f64::max);
    let gap = match h {
        None => None,
        Some(h) => {
            if !(h > 0.0 && h < k) {
                return Err(invalid("h", "need 0 < h < k"));
            }
            let gh = table(f, h, &angles)?;
            let measured = gh.iter().zip(&values).map(|(a, b)| a / b).fold(f64::INFINITY, f64::min) - 1.0;
            let x = (k - h) / h;
            let profile = x.powf(h_est).min(x.powf(1.0 / (h_est * (h_est + 1.0))));
            Some(LevelGap { h, k, measured, profile, empirical_c: profile / measured })
        }
    };
    Ok(GaugeSample {
        k,
        angles,
        values,
        sup,
        inf,
        lipschitz: tangential.max(sup),
        lipschitz_bound: 1.1 * h_est * sup,
        gap,
    })
}

/// Growth of `G` at large radii.
#[derive(Debug, Clone, PartialEq)]
pub struct Coercivity {
    /// `min_e log(G(t e)/G(e)) / log t`, the growth exponent between radii 1 and `t`.
    pub exponent: f64,
    /// `min G(y)/|y|^{1+1/H}` over the sampled `|y| > 1`.
    pub constant: f64,
}

/// Samples `G` along `rays` directions at radii in `(1, t]`.
pub fn coercivity(f: &Integrand, rays: usize, t: f64, h: f64) -> Result<Coercivity> {
    let dirs: Vec<Vec2> = (0..rays)
        .map(|i| {
            let th = 2.0 * PI * (i as f64 + 0.5) / rays as f64;
            Vec2::new(th.cos(), th.sin())
        })
        .collect();
    let radii: Vec<f64> = (1..=12).map(|j| t.powf(j as f64 / 12.0)).collect();
    let q = 1.0 + 1.0 / h;
    let rows: Vec<Result<(f64, f64)>> = dirs
        .par_iter()
        .map(|e| {
            let mut c = f64::INFINITY;
            for &r in &radii {
                c = c.min(g_eval(f, &(r * e))? / r.powf(q));
            }
            Ok(((g_eval(f, &(t * e))? / g_eval(f, e)?).ln() / t.ln(), c))
        })
        .collect();
    let mut out = Coercivity { exponent: f64::INFINITY, constant: f64::INFINITY };
    for r in rows {
        let (e, c) = r?;
        out.exponent = out.exponent.min(e);
        out.constant = out.constant.min(c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrand::{make_anisotropic_quadratic, make_power};
    use approx::assert_relative_eq;

    #[test]
    fn inverse_of_power_gradient() {
        let f = make_power(3.0).unwrap();
        assert_eq!(df_inverse(&f, &Vec2::zeros()).unwrap(), Vec2::zeros());
        let w = df_inverse(&f, &Vec2::new(4.0, 0.0)).unwrap();
        assert_relative_eq!(w, Vec2::new(2.0, 0.0), epsilon = 1e-10);
        assert_relative_eq!(g_eval(&f, &Vec2::new(4.0, 0.0)).unwrap(), 8.0 / 3.0, max_relative = 1e-10);
    }

    #[test]
    fn quadratic_gauge() {
        let f = make_power(2.0).unwrap();
        let z = Vec2::new(0.6, -1.3);
        assert_relative_eq!(gauge(&f, 2.0, &z).unwrap(), z.norm() / 2.0, max_relative = 1e-10);
        assert_eq!(gauge(&f, 2.0, &Vec2::zeros()).unwrap(), 0.0);
    }

    #[test]
    fn ellipse_gauge_ratio() {
        let f = make_anisotropic_quadratic(Mat2::new(2.0, 0.0, 0.0, 1.0)).unwrap();
        let s = gauge_bounds(&f, 1.0, 2.0, 64, None).unwrap();
        assert_relative_eq!(s.sup_inf_ratio(), 2f64.sqrt(), max_relative = 1e-9);
        assert!(s.lipschitz_ok());
    }

    #[test]
    fn power_level_gap() {
        let f = make_power(3.0).unwrap();
        let s = gauge_bounds(&f, 1.5, 2.0, 32, Some(1.0)).unwrap();
        let gap = s.gap.unwrap();
        assert_relative_eq!(gap.measured, 1.5f64.powf(2.0 / 3.0) - 1.0, max_relative = 1e-8);
        assert!(gap.empirical_c > 0.0);
    }
}
