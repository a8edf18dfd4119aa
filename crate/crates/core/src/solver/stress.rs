use nalgebra::{Matrix3, Vector3};

use crate::linalg::{Mat2, Vec2};

use super::problem::GridProblem;
use super::solve::GridSolution;

/// Per-triangle stress with a recovered derivative.
#[derive(Debug, Clone)]
pub struct StressField {
    pub v: Vec<Vec2>,
    /// Least-squares `DV` at each node touching the domain; rows are the
    /// components of `V`.
    pub dv_nodal: Vec<Option<Mat2>>,
    /// Mean of the three nodal values on each triangle.
    pub dv: Vec<Mat2>,
    /// `max_a |Σ_T |T| (V_T, Dφ_a)|` over free nodes.
    pub divergence: f64,
}

/// Linear fit `V ≈ c + M (b − x)` over the barycenters of `tris`.
fn fit(p: &GridProblem, v: &[Vec2], x: &Vec2, tris: &[usize]) -> Option<Mat2> {
    if tris.len() < 3 {
        return None;
    }
    let (sx, sy) = (1.0 / p.hx, 1.0 / p.hy);
    let mut n = Matrix3::<f64>::zeros();
    let mut b1 = Vector3::<f64>::zeros();
    let mut b2 = Vector3::<f64>::zeros();
    for &k in tris {
        let d = p.triangles[k].barycenter - x;
        let row = Vector3::new(1.0, d.x * sx, d.y * sy);
        n += row * row.transpose();
        b1 += row * v[k].x;
        b2 += row * v[k].y;
    }
    let ch = n.cholesky()?;
    let diag_min = (0..3).map(|i| ch.l()[(i, i)]).fold(f64::INFINITY, f64::min);
    if diag_min < 1e-8 * (tris.len() as f64).sqrt() {
        return None;
    }
    let c1 = ch.solve(&b1);
    let c2 = ch.solve(&b2);
    Some(Mat2::new(c1[1] * sx, c1[2] * sy, c2[1] * sx, c2[2] * sy))
}

pub fn stress_field(sol: &GridSolution) -> StressField {
    let p = &sol.problem;
    let nn = p.n * p.n;
    let mut dv_nodal = vec![None; nn];
    for (a, slot) in dv_nodal.iter_mut().enumerate() {
        let patch = &p.node_triangles[a];
        if patch.is_empty() {
            continue;
        }
        let x = p.coords(a);
        *slot = fit(p, &sol.v, &x, patch).or_else(|| {
            // corners: widen to every triangle sharing a node with the patch
            let mut wide: Vec<usize> = patch
                .iter()
                .flat_map(|&k| p.triangles[k].nodes)
                .flat_map(|b| p.node_triangles[b].iter().copied())
                .collect();
            wide.sort_unstable();
            wide.dedup();
            fit(p, &sol.v, &x, &wide)
        });
    }
    let dv = p
        .triangles
        .iter()
        .map(|t| {
            let vals: Vec<Mat2> = t.nodes.iter().filter_map(|&a| dv_nodal[a]).collect();
            if vals.is_empty() {
                Mat2::zeros()
            } else {
                vals.iter().sum::<Mat2>() / vals.len() as f64
            }
        })
        .collect();
    let area = p.triangle_area();
    let mut pair = vec![0.0; nn];
    for (t, v) in p.triangles.iter().zip(&sol.v) {
        for (a, g) in t.nodes.iter().zip(&t.grads) {
            pair[*a] += area * v.dot(g);
        }
    }
    let divergence = p.free_nodes.iter().map(|&a| pair[a].abs()).fold(0.0, f64::max);
    StressField { v: sol.v.clone(), dv_nodal, dv, divergence }
}
