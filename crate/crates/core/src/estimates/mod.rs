//! Discrete checks of the regularity estimates on solved grid problems.

mod degiorgi;

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, QucError, Result};
use crate::integrand::Normalised;
use crate::linalg::Vec2;
use crate::qc_analysis::EtaProfile;
use crate::solver::{GridSolution, StressField};

pub use degiorgi::{degiorgi_iterate, degiorgi_threshold, DeGiorgiOutcome, Verdict, VANISH_LEVEL};

/// Acceptance slack on the Caccioppoli ratio.
pub const CACCIOPPOLI_SLACK: f64 = 1.2;

/// Balls with fewer triangles than this get a note in their report.
pub const MIN_BALL_TRIANGLES: usize = 200;

/// One row of a verification CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub estimate: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; 0 when both vanish, `inf` when only `rhs` does.
    pub ratio: f64,
    /// Constant multiplying the right-hand side, when the estimate has one.
    pub constant: Option<f64>,
    /// Smallest constant making the inequality hold on this instance.
    pub empirical_c: Option<f64>,
    pub slack: Option<f64>,
    pub holds: Option<bool>,
    pub n: usize,
    pub integrand: String,
    pub h_est: Option<f64>,
    pub k: Option<f64>,
    pub ell_a1: Option<f64>,
    pub ell_a2: Option<f64>,
    pub rho: Option<f64>,
    pub radius: f64,
    pub center_x: f64,
    pub center_y: f64,
    pub triangles_inner: usize,
    pub triangles_outer: usize,
    pub straddling: usize,
    pub note: String,
}

impl VerificationReport {
    fn new(estimate: &str, sol: &GridSolution, lhs: f64, rhs: f64, radius: f64, center: &Vec2) -> Self {
        Self {
            estimate: estimate.to_string(),
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
            constant: None,
            empirical_c: None,
            slack: None,
            holds: None,
            n: sol.problem.n,
            integrand: sol.problem.integrand.descriptor(),
            h_est: None,
            k: None,
            ell_a1: None,
            ell_a2: None,
            rho: None,
            radius,
            center_x: center.x,
            center_y: center.y,
            triangles_inner: 0,
            triangles_outer: 0,
            straddling: 0,
            note: String::new(),
        }
    }

    fn note_small_ball(&mut self, count: usize) {
        if count < MIN_BALL_TRIANGLES {
            self.note = format!("only {count} triangles in the smallest ball");
        }
    }
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Writes reports as CSV, preceded by `# comment` when given.
pub fn write_reports<W: Write>(mut w: W, comment: Option<&str>, reports: &[VerificationReport]) -> Result<()> {
    if let Some(c) = comment {
        writeln!(w, "# {c}")?;
    }
    let mut csv = csv::Writer::from_writer(w);
    for r in reports {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(())
}

/// Reads reports written by [`write_reports`], skipping `#` lines.
pub fn read_reports<R: Read>(r: R) -> Result<Vec<VerificationReport>> {
    let mut csv = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    csv.deserialize().map(|row| row.map_err(QucError::from)).collect()
}

/// Affine function `ℓ(z) = (a, z) + k` on gradient space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub a: Vec2,
    pub k: f64,
}

impl Affine {
    pub fn constant(k: f64) -> Self {
        Self { a: Vec2::zeros(), k }
    }

    pub fn eval(&self, z: &Vec2) -> f64 {
        self.a.dot(z) + self.k
    }
}

/// Checks that `B_r(center)` lies in the solved domain.
pub fn ball_inside(sol: &GridSolution, center: &Vec2, r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("radius", format!("must be positive, got {r}")));
    }
    let d = &sol.problem.domain;
    let tol = 1e-12 * (1.0 + center.norm());
    let fits = center.x - r >= d.x0 - tol
        && center.x + r <= d.x1 + tol
        && center.y - r >= d.y0 - tol
        && center.y + r <= d.y1 + tol
        && d.mask.is_none_or(|c| (center - c.center).norm() + r <= c.radius + tol);
    if fits {
        Ok(())
    } else {
        Err(invalid(
            "radius",
            format!("ball of radius {r} around ({}, {}) leaves the domain", center.x, center.y),
        ))
    }
}

/// Triangles whose barycenter lies in the open ball `B_r(center)`.
pub fn ball_triangles(sol: &GridSolution, center: &Vec2, r: f64) -> Vec<usize> {
    sol.problem
        .triangles()
        .iter()
        .enumerate()
        .filter(|(_, t)| (t.barycenter - center).norm() < r)
        .map(|(k, _)| k)
        .collect()
}

fn nonempty_ball(sol: &GridSolution, center: &Vec2, r: f64) -> Result<Vec<usize>> {
    let set = ball_triangles(sol, center, r);
    if set.is_empty() {
        return Err(invalid("radius", format!("no triangle barycenter within {r} of ({}, {})", center.x, center.y)));
    }
    Ok(set)
}

fn frob2(m: &crate::linalg::Mat2) -> f64 {
    m.iter().map(|x| x * x).sum()
}

/// Super-level test `F(Du) ≥ ℓ(Du)` on every triangle.
fn super_level(sol: &GridSolution, ell: &Affine) -> Vec<bool> {
    let f = &sol.problem.integrand;
    sol.du.iter().map(|z| f.eval(z) >= ell.eval(z)).collect()
}

/// Triangles of `set` touching, through a node, a triangle of `ball` outside `set`.
fn straddling(sol: &GridSolution, ball: &[usize], member: &[bool]) -> usize {
    let p = &sol.problem;
    let mut in_ball = vec![false; member.len()];
    for &t in ball {
        in_ball[t] = true;
    }
    ball.iter()
        .filter(|&&t| member[t])
        .filter(|&&t| {
            p.triangles()[t]
                .nodes
                .iter()
                .flat_map(|&a| p.node_triangles(a))
                .any(|&s| in_ball[s] && !member[s])
        })
        .count()
}

/// Caccioppoli inequality on super-level sets of `F(Du) − ℓ(Du)`:
/// `∫_{A(ℓ,ρ)} |DV|² ≤ (πH/(R−ρ))² ∫_{A(ℓ,R)} |V − Dℓ|²`.
pub fn caccioppoli_check(
    sol: &GridSolution,
    stress: &StressField,
    ell: &Affine,
    rho: f64,
    big_r: f64,
    center: &Vec2,
    h_est: f64,
) -> Result<VerificationReport> {
    if !(rho > 0.0 && rho < big_r) {
        return Err(invalid("rho", format!("need 0 < rho < R, got rho = {rho}, R = {big_r}")));
    }
    if !(h_est >= 1.0 && h_est.is_finite()) {
        return Err(invalid("h_est", format!("must be a finite value >= 1, got {h_est}")));
    }
    ball_inside(sol, center, big_r)?;
    let area = sol.problem.triangle_area();
    let member = super_level(sol, ell);
    let outer: Vec<usize> = ball_triangles(sol, center, big_r).into_iter().filter(|&t| member[t]).collect();
    let inner: Vec<usize> = ball_triangles(sol, center, rho).into_iter().filter(|&t| member[t]).collect();
    if outer.is_empty() && !inner.is_empty() {
        return Err(QucError::Inconsistent("A(l, rho) nonempty inside an empty A(l, R)".into()));
    }
    let lhs: f64 = inner.iter().map(|&t| area * frob2(&stress.dv[t])).fold(0.0, |s, x| s + x);
    let mass: f64 = outer.iter().map(|&t| area * (stress.v[t] - ell.a).norm_squared()).fold(0.0, |s, x| s + x);
    let constant = (PI * h_est / (big_r - rho)).powi(2);
    let rhs = constant * mass;
    let mut r = VerificationReport::new("caccioppoli", sol, lhs, rhs, big_r, center);
    r.constant = Some(constant);
    r.empirical_c = Some(ratio(lhs, mass));
    r.slack = Some(CACCIOPPOLI_SLACK);
    r.holds = Some(r.ratio <= CACCIOPPOLI_SLACK);
    r.h_est = Some(h_est);
    r.k = Some(ell.k);
    r.ell_a1 = Some(ell.a.x);
    r.ell_a2 = Some(ell.a.y);
    r.rho = Some(rho);
    r.triangles_inner = inner.len();
    r.triangles_outer = outer.len();
    let ball = ball_triangles(sol, center, big_r);
    r.straddling = straddling(sol, &ball, &member);
    r.note_small_ball(ball_triangles(sol, center, rho).len());
    Ok(r)
}

/// `∫_{B_R} |DV|²` against `R^{-4} (∫_{B_{2R}} |V|)²`; the ratio is the
/// empirical constant.
pub fn caccioppoli_l1_check(sol: &GridSolution, stress: &StressField, radius: f64, center: &Vec2) -> Result<VerificationReport> {
    ball_inside(sol, center, 2.0 * radius)?;
    let area = sol.problem.triangle_area();
    let inner = nonempty_ball(sol, center, radius)?;
    let outer = ball_triangles(sol, center, 2.0 * radius);
    let lhs: f64 = inner.iter().map(|&t| area * frob2(&stress.dv[t])).fold(0.0, |s, x| s + x);
    let l1: f64 = outer.iter().map(|&t| area * stress.v[t].norm()).fold(0.0, |s, x| s + x);
    let rhs = l1 * l1 / radius.powi(4);
    let mut r = VerificationReport::new("caccioppoli-l1", sol, lhs, rhs, radius, center);
    r.empirical_c = Some(r.ratio);
    r.triangles_inner = inner.len();
    r.triangles_outer = outer.len();
    r.note_small_ball(inner.len());
    Ok(r)
}

/// Sobolev bounds on the stress field. Returns the `DV` row and the `V` row;
/// both right-hand sides are `i_F η(⨍_{B_{2R}} (F(Du) − min F) / i_F)` with
/// `η = η_{H/(H+1), 1/(H+1)}`, the first divided by `R`. This is the
/// normalised estimate rewritten for `F` itself.
pub fn sobolev_stress_check(
    sol: &GridSolution,
    stress: &StressField,
    radius: f64,
    center: &Vec2,
    h_est: f64,
    norm: &Normalised,
) -> Result<[VerificationReport; 2]> {
    if !(h_est >= 1.0 && h_est.is_finite()) {
        return Err(invalid("h_est", format!("must be a finite value >= 1, got {h_est}")));
    }
    let i_f = norm.i_f;
    if !(i_f > 0.0 && i_f.is_finite()) {
        return Err(invalid("i_f", format!("must be positive, got {i_f}")));
    }
    ball_inside(sol, center, 2.0 * radius)?;
    let f = &sol.problem.integrand;
    let inner = nonempty_ball(sol, center, radius)?;
    let outer = ball_triangles(sol, center, 2.0 * radius);
    let mean = |set: &[usize], g: &dyn Fn(usize) -> f64| set.iter().map(|&t| g(t)).sum::<f64>() / set.len() as f64;
    let energy = mean(&outer, &|t| f.eval(&sol.du[t]) - norm.min_value).max(0.0);
    let eta = EtaProfile::new(h_est / (h_est + 1.0), 1.0 / (h_est + 1.0))?;
    let bound = i_f * eta.eta(energy / i_f);
    let dv = mean(&inner, &|t| frob2(&stress.dv[t])).sqrt();
    let v = mean(&inner, &|t| stress.v[t].norm_squared()).sqrt();

    let mut rows = [
        VerificationReport::new("sobolev-dv", sol, dv, bound / radius, radius, center),
        VerificationReport::new("sobolev-v", sol, v, bound, radius, center),
    ];
    for r in &mut rows {
        r.empirical_c = Some(r.ratio);
        r.h_est = Some(h_est);
        r.triangles_inner = inner.len();
        r.triangles_outer = outer.len();
        r.note_small_ball(inner.len());
    }
    Ok(rows)
}

/// `sup_{B_{R/2}} F(Du) / ⨍_{B_{2R}} F(Du)` over triangle barycenters.
pub fn lipschitz_check(sol: &GridSolution, radius: f64, center: &Vec2) -> Result<VerificationReport> {
    ball_inside(sol, center, 2.0 * radius)?;
    let f = &sol.problem.integrand;
    let inner = nonempty_ball(sol, center, 0.5 * radius)?;
    let outer = ball_triangles(sol, center, 2.0 * radius);
    let sup = inner.iter().map(|&t| f.eval(&sol.du[t])).fold(f64::NEG_INFINITY, f64::max);
    let mean = outer.iter().map(|&t| f.eval(&sol.du[t])).sum::<f64>() / outer.len() as f64;
    if mean == 0.0 && sup != 0.0 {
        return Err(QucError::Inconsistent(format!("zero mean energy on B_2R with sup {sup} on B_R/2")));
    }
    let mut r = VerificationReport::new("lipschitz", sol, sup, mean, radius, center);
    r.empirical_c = Some(r.ratio);
    r.triangles_inner = inner.len();
    r.triangles_outer = outer.len();
    r.note_small_ball(inner.len());
    Ok(r)
}
