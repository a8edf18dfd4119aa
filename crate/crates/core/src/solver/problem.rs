use crate::error::{invalid, Result};
use crate::expr::BoundaryExpr;
use crate::integrand::Integrand;
use crate::linalg::Vec2;

/// Axis-aligned rectangle with an optional circular mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub mask: Option<Circle>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl Domain {
    pub fn unit_square() -> Self {
        Self::rectangle(0.0, 1.0, 0.0, 1.0)
    }

    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1, mask: None }
    }

    pub fn with_mask(mut self, center: Vec2, radius: f64) -> Self {
        self.mask = Some(Circle { center, radius });
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryData {
    Expression(BoundaryExpr),
    /// One value per grid node, row-major in `x`; values at free nodes are
    /// ignored.
    Nodal(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Newton, falling back to gradient descent when Newton stalls.
    #[default]
    Auto,
    Newton,
    GradientDescent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol_rel: f64,
    pub max_iter: usize,
    pub gd_max_iter: usize,
    pub method: Method,
    /// Forces sequential assembly.
    pub reproducible: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol_rel: 1e-9, max_iter: 200, gd_max_iter: 100_000, method: Method::Auto, reproducible: false }
    }
}

/// A P1 triangle: node ids and the constant gradient of each hat function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub nodes: [usize; 3],
    pub grads: [Vec2; 3],
    pub barycenter: Vec2,
}

/// Dirichlet problem for `∫ F(Du)` on a structured grid with `n` nodes per
/// side; each cell is split along its lower-left/upper-right diagonal.
#[derive(Debug, Clone)]
pub struct GridProblem {
    pub domain: Domain,
    pub n: usize,
    pub hx: f64,
    pub hy: f64,
    pub integrand: Integrand,
    pub options: SolverOptions,
    /// Prescribed values at every node (free-node entries unused).
    pub(crate) data: Vec<f64>,
    pub(crate) triangles: Vec<Triangle>,
    /// Index into the unknown vector, for free nodes.
    pub(crate) free_index: Vec<Option<usize>>,
    pub(crate) free_nodes: Vec<usize>,
    /// Domain triangles containing each node.
    pub(crate) node_triangles: Vec<Vec<usize>>,
    pub(crate) boundary: BoundaryData,
}

impl GridProblem {
    pub fn new(domain: Domain, n: usize, boundary: BoundaryData, integrand: Integrand) -> Result<Self> {
        if n < 9 {
            return Err(invalid("n", "need at least 9 nodes per side"));
        }
        if !(domain.x1 > domain.x0 && domain.y1 > domain.y0) {
            return Err(invalid("domain", "rectangle must have positive extent"));
        }
        if let Some(c) = domain.mask {
            if !(c.radius > 0.0) {
                return Err(invalid("domain.mask.radius", "must be positive"));
            }
        }
        let hx = (domain.x1 - domain.x0) / (n - 1) as f64;
        let hy = (domain.y1 - domain.y0) / (n - 1) as f64;
        let coords = |id: usize| Vec2::new(domain.x0 + (id % n) as f64 * hx, domain.y0 + (id / n) as f64 * hy);
        let data = match &boundary {
            BoundaryData::Expression(e) => e.eval_many((0..n * n).map(|id| (coords(id).x, coords(id).y)))?,
            BoundaryData::Nodal(v) => {
                if v.len() != n * n {
                    return Err(invalid("boundary", format!("expected {} nodal values, got {}", n * n, v.len())));
                }
                if !v.iter().all(|x| x.is_finite()) {
                    return Err(invalid("boundary", "nodal values must be finite"));
                }
                v.clone()
            }
        };
        let inside = |p: &Vec2| domain.mask.is_none_or(|c| (p - c.center).norm() < c.radius);
        let id = |i: usize, j: usize| j * n + i;
        let mut triangles = Vec::with_capacity(2 * (n - 1) * (n - 1));
        let (ix, iy) = (1.0 / hx, 1.0 / hy);
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let (p00, p10, p11, p01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                let lower = Triangle {
                    nodes: [p00, p10, p11],
                    grads: [Vec2::new(-ix, 0.0), Vec2::new(ix, -iy), Vec2::new(0.0, iy)],
                    barycenter: (coords(p00) + coords(p10) + coords(p11)) / 3.0,
                };
                let upper = Triangle {
                    nodes: [p00, p11, p01],
                    grads: [Vec2::new(0.0, -iy), Vec2::new(ix, 0.0), Vec2::new(-ix, iy)],
                    barycenter: (coords(p00) + coords(p11) + coords(p01)) / 3.0,
                };
                for t in [lower, upper] {
                    if inside(&t.barycenter) {
                        triangles.push(t);
                    }
                }
            }
        }
        if triangles.is_empty() {
            return Err(invalid("domain.mask", "no triangle lies inside the mask"));
        }
        let mut node_triangles = vec![Vec::new(); n * n];
        for (k, t) in triangles.iter().enumerate() {
            for &a in &t.nodes {
                node_triangles[a].push(k);
            }
        }
        let mut free_index = vec![None; n * n];
        let mut free_nodes = Vec::new();
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                // interior nodes of this mesh touch six triangles
                let a = id(i, j);
                if node_triangles[a].len() == 6 {
                    free_index[a] = Some(free_nodes.len());
                    free_nodes.push(a);
                }
            }
        }
        Ok(Self {
            domain,
            n,
            hx,
            hy,
            integrand,
            options: SolverOptions::default(),
            data,
            triangles,
            free_index,
            free_nodes,
            node_triangles,
            boundary,
        })
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn coords(&self, id: usize) -> Vec2 {
        Vec2::new(self.domain.x0 + (id % self.n) as f64 * self.hx, self.domain.y0 + (id / self.n) as f64 * self.hy)
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn triangle_area(&self) -> f64 {
        0.5 * self.hx * self.hy
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free_nodes
    }

    pub fn is_free(&self, id: usize) -> bool {
        self.free_index[id].is_some()
    }

    pub fn node_triangles(&self, id: usize) -> &[usize] {
        &self.node_triangles[id]
    }

    /// Prescribed nodal values (meaningful at non-free nodes).
    pub fn boundary_values(&self) -> &[f64] {
        &self.data
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.boundary
    }

    /// The same problem on a grid with `n` nodes per side (expression data only).
    pub fn with_n(&self, n: usize) -> Result<Self> {
        if matches!(self.boundary, BoundaryData::Nodal(_)) {
            return Err(invalid("boundary", "nodal boundary data cannot be transferred to another grid"));
        }
        Ok(Self::new(self.domain, n, self.boundary.clone(), self.integrand.clone())?.with_options(self.options))
    }

    /// Transfinite (Coons) interpolation of the rectangle edges; prescribed
    /// values are kept at all non-free nodes.
    pub fn initial_guess(&self) -> Vec<f64> {
        let n = self.n;
        let d = &self.data;
        let at = |i: usize, j: usize| d[j * n + i];
        let mut u = d.clone();
        for &a in &self.free_nodes {
            let (i, j) = (a % n, a / n);
            let s = i as f64 / (n - 1) as f64;
            let t = j as f64 / (n - 1) as f64;
            let ex = (1.0 - s) * at(0, j) + s * at(n - 1, j);
            let ey = (1.0 - t) * at(i, 0) + t * at(i, n - 1);
            let corners = (1.0 - s) * (1.0 - t) * at(0, 0)
                + s * (1.0 - t) * at(n - 1, 0)
                + (1.0 - s) * t * at(0, n - 1)
                + s * t * at(n - 1, n - 1);
            u[a] = ex + ey - corners;
        }
        u
    }

    /// Constant gradient on triangle `t`.
    pub fn gradient_on(&self, t: &Triangle, u: &[f64]) -> Vec2 {
        t.grads[0] * u[t.nodes[0]] + t.grads[1] * u[t.nodes[1]] + t.grads[2] * u[t.nodes[2]]
    }
}
