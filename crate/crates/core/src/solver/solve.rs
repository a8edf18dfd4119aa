use rayon::prelude::*;

use crate::error::{QucError, Result};
use crate::linalg::{BandedSpd, Mat2, SymEigen2, Vec2};

use super::problem::{GridProblem, Method, Triangle};

/// Eigenvalue cap for per-triangle Hessians; non-finite Hessians become
/// this multiple of the identity.
pub const HESSIAN_CAP: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct GridSolution {
    pub problem: GridProblem,
    /// Nodal values.
    pub u: Vec<f64>,
    /// Per-triangle gradient.
    pub du: Vec<Vec2>,
    /// Per-triangle stress `DF(Du)`.
    pub v: Vec<Vec2>,
    pub energy: f64,
    /// Max-norm of the energy gradient over free nodes.
    pub residual: f64,
    pub initial_residual: f64,
    /// Stopping threshold `tol_rel·(1 + initial_residual)`.
    pub tolerance: f64,
    pub newton_iterations: usize,
    pub gd_iterations: usize,
    pub converged: bool,
    /// Energy after each accepted iteration, starting with the initial guess.
    pub energy_history: Vec<f64>,
}

impl GridSolution {
    pub fn iterations(&self) -> usize {
        self.newton_iterations + self.gd_iterations
    }
}

fn map_triangles<T: Send>(p: &GridProblem, f: impl Fn(&Triangle) -> T + Sync + Send) -> Vec<T> {
    if p.options.reproducible {
        p.triangles.iter().map(f).collect()
    } else {
        p.triangles.par_iter().map(f).collect()
    }
}

/// `E(u) = Σ_T |T|·F(Du_T)`.
pub fn energy(p: &GridProblem, u: &[f64]) -> Result<f64> {
    check_len(p, u)?;
    let area = p.triangle_area();
    let vals = map_triangles(p, |t| p.integrand.eval(&p.gradient_on(t, u)));
    let mut e = 0.0;
    for (k, v) in vals.iter().enumerate() {
        if !v.is_finite() {
            return Err(non_finite(p, k, u));
        }
        e += area * v;
    }
    Ok(e)
}

fn check_len(p: &GridProblem, u: &[f64]) -> Result<()> {
    if u.len() != p.n * p.n {
        return Err(QucError::ShapeMismatch(format!("expected {} nodal values, got {}", p.n * p.n, u.len())));
    }
    Ok(())
}

fn non_finite(p: &GridProblem, k: usize, u: &[f64]) -> QucError {
    let z = p.gradient_on(&p.triangles[k], u);
    QucError::NonFinite { context: format!("F at triangle gradient ({}, {})", z.x, z.y) }
}

/// Energy and its gradient with respect to every nodal value.
pub fn assemble_energy(p: &GridProblem, u: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_len(p, u)?;
    let area = p.triangle_area();
    let parts = map_triangles(p, |t| {
        let z = p.gradient_on(t, u);
        (p.integrand.eval(&z), p.integrand.grad(&z))
    });
    let mut e = 0.0;
    let mut g = vec![0.0; u.len()];
    for (k, (t, (f, df))) in p.triangles.iter().zip(&parts).enumerate() {
        if !f.is_finite() || !df.iter().all(|x| x.is_finite()) {
            return Err(non_finite(p, k, u));
        }
        e += area * f;
        for (a, ga) in t.nodes.iter().zip(&t.grads) {
            g[*a] += area * df.dot(ga);
        }
    }
    Ok((e, g))
}

fn residual(p: &GridProblem, g: &[f64]) -> f64 {
    p.free_nodes.iter().map(|&a| g[a].abs()).fold(0.0, f64::max)
}

fn bandwidth(p: &GridProblem) -> usize {
    let mut bw = 0;
    for t in &p.triangles {
        for &a in &t.nodes {
            for &b in &t.nodes {
                if let (Some(i), Some(j)) = (p.free_index[a], p.free_index[b]) {
                    bw = bw.max(i.abs_diff(j));
                }
            }
        }
    }
    bw
}

fn clamped_hessian(h: Mat2) -> Mat2 {
    if !h.iter().all(|x| x.is_finite()) {
        return Mat2::from_diagonal_element(HESSIAN_CAP);
    }
    SymEigen2::new(&h).map(|l| l.clamp(0.0, HESSIAN_CAP))
}

struct State {
    u: Vec<f64>,
    e: f64,
    g: Vec<f64>,
    r: f64,
}

/// Backtracking along `d` (free-node vector). Accepts Armijo decrease, or an
/// energy change within rounding noise that lowers the residual.
fn line_search(p: &GridProblem, s: &State, d: &[f64], t0: f64) -> Result<Option<(State, f64)>> {
    let slope: f64 = p.free_nodes.iter().zip(d).map(|(&a, di)| s.g[a] * di).sum();
    if !(slope < 0.0) {
        return Ok(None);
    }
    let noise = 1e-13 * (1.0 + s.e.abs());
    let mut t = t0;
    for _ in 0..60 {
        let mut u = s.u.clone();
        for (&a, di) in p.free_nodes.iter().zip(d) {
            u[a] += t * di;
        }
        match energy(p, &u) {
            Ok(e) => {
                if e <= s.e + 1e-4 * t * slope || e <= s.e + noise {
                    let (e, g) = assemble_energy(p, &u)?;
                    let r = residual(p, &g);
                    if e <= s.e + 1e-4 * t * slope || r < s.r {
                        return Ok(Some((State { u, e, g, r }, t)));
                    }
                }
            }
            Err(QucError::NonFinite { .. }) => {}
            Err(e) => return Err(e),
        }
        t *= 0.5;
    }
    Ok(None)
}

fn newton_direction(p: &GridProblem, s: &State, bw: usize) -> Option<Vec<f64>> {
    let area = p.triangle_area();
    let hs = map_triangles(p, |t| clamped_hessian(p.integrand.hess(&p.gradient_on(t, &s.u))));
    let nf = p.free_nodes.len();
    let mut k = BandedSpd::zeros(nf, bw);
    for (t, h) in p.triangles.iter().zip(&hs) {
        for i in 0..3 {
            let Some(fi) = p.free_index[t.nodes[i]] else { continue };
            let hg = h * t.grads[i];
            for j in 0..=i {
                let Some(fj) = p.free_index[t.nodes[j]] else { continue };
                k.add(fi, fj, area * hg.dot(&t.grads[j]));
            }
        }
    }
    let rhs: Vec<f64> = p.free_nodes.iter().map(|&a| -s.g[a]).collect();
    let mut shift = 1e-10 * (1.0 + s.r);
    let scale = k.max_abs_diagonal().max(1.0);
    for _ in 0..12 {
        let mut kk = k.clone();
        kk.add_diagonal(shift);
        if let Some(ch) = kk.cholesky() {
            let d = ch.solve(&rhs);
            if d.iter().all(|x| x.is_finite()) {
                return Some(d);
            }
        }
        shift = (shift * 100.0).max(1e-12 * scale);
    }
    None
}

/// Minimises the discrete energy over the free nodes.
pub fn solve(p: &GridProblem) -> Result<GridSolution> {
    let opts = p.options;
    let u = p.initial_guess();
    let (e, g) = assemble_energy(p, &u)?;
    let r = residual(p, &g);
    let r0 = r;
    let tol = opts.tol_rel * (1.0 + r0);
    let mut s = State { u, e, g, r };
    let mut history = vec![s.e];
    let mut newton_iterations = 0;
    let mut gd_iterations = 0;

    if opts.method != Method::GradientDescent && !p.free_nodes.is_empty() {
        let bw = bandwidth(p);
        while s.r > tol && newton_iterations < opts.max_iter {
            let Some(d) = newton_direction(p, &s, bw) else { break };
            let Some((next, _)) = line_search(p, &s, &d, 1.0)? else { break };
            newton_iterations += 1;
            s = next;
            history.push(s.e);
        }
    }
    if s.r > tol && opts.method != Method::Newton && !p.free_nodes.is_empty() {
        // Barzilai–Borwein steps safeguarded by Armijo backtracking
        let mut alpha = 1.0;
        while s.r > tol && gd_iterations < opts.gd_max_iter {
            let d: Vec<f64> = p.free_nodes.iter().map(|&a| -s.g[a]).collect();
            let Some((next, t)) = line_search(p, &s, &d, alpha)? else { break };
            let mut ss = 0.0;
            let mut sy = 0.0;
            for (&a, di) in p.free_nodes.iter().zip(&d) {
                let step = t * di;
                ss += step * step;
                sy += step * (next.g[a] - s.g[a]);
            }
            alpha = if sy > 0.0 { ss / sy } else { 2.0 * t };
            gd_iterations += 1;
            s = next;
            history.push(s.e);
        }
    }

    let du: Vec<Vec2> = p.triangles.iter().map(|t| p.gradient_on(t, &s.u)).collect();
    let v: Vec<Vec2> = du.iter().map(|z| p.integrand.grad(z)).collect();
    Ok(GridSolution {
        problem: p.clone(),
        converged: s.r <= tol,
        u: s.u,
        du,
        v,
        energy: s.e,
        residual: s.r,
        initial_residual: r0,
        tolerance: tol,
        newton_iterations,
        gd_iterations,
        energy_history: history,
    })
}
