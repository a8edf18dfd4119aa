//! Small dense helpers: closed-form 2×2 symmetric eigenpairs and a banded
//! Cholesky factorisation for the grid Newton systems.

use nalgebra::{DMatrix, Matrix2, Vector2};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Eigen-decomposition of a symmetric 2×2 matrix, eigenvalues ascending.
#[derive(Debug, Clone, Copy)]
pub struct SymEigen2 {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Unit eigenvector for `lambda_min`.
    pub v_min: Vec2,
    /// Unit eigenvector for `lambda_max`.
    pub v_max: Vec2,
}

impl SymEigen2 {
    /// Uses the trace/determinant closed form; the lower-left entry is ignored.
    pub fn new(m: &Mat2) -> Self {
        let (a, b, c) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
        if b == 0.0 {
            return if a <= c {
                Self { lambda_min: a, lambda_max: c, v_min: Vec2::x(), v_max: Vec2::y() }
            } else {
                Self { lambda_min: c, lambda_max: a, v_min: Vec2::y(), v_max: Vec2::x() }
            };
        }
        let mean = 0.5 * (a + c);
        let radius = (0.5 * (a - c)).hypot(b);
        let lambda_max = mean + radius;
        let det = a * c - b * b;
        // det / lambda_max avoids cancellation in mean - radius when both are positive
        let lambda_min = if mean > 0.0 && lambda_max > 0.0 && det >= 0.0 {
            det / lambda_max
        } else {
            mean - radius
        };
        let cand1 = Vec2::new(b, lambda_max - a);
        let cand2 = Vec2::new(lambda_max - c, b);
        let v = if cand1.norm_squared() >= cand2.norm_squared() { cand1 } else { cand2 };
        let v_max = v.normalize();
        let v_min = Vec2::new(-v_max.y, v_max.x);
        Self { lambda_min, lambda_max, v_min, v_max }
    }

    /// Rebuilds `V diag(f(λ)) Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Mat2 {
        f(self.lambda_min) * self.v_min * self.v_min.transpose()
            + f(self.lambda_max) * self.v_max * self.v_max.transpose()
    }

    pub fn ratio(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }
}

/// Ascending eigenvalues of a symmetric matrix of any size. The 2×2 case goes
/// through the closed form.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 2 && m.ncols() == 2 {
        let e = SymEigen2::new(&Mat2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]));
        return vec![e.lambda_min, e.lambda_max];
    }
    let mut vals: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Symmetric positive definite banded matrix in lower-band storage.
#[derive(Debug, Clone)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self { n, bw: bandwidth, data: vec![0.0; n * (bandwidth + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw + j - i)
    }

    /// Adds `v` to entry (i, j); only the lower triangle is stored, so
    /// callers add each off-diagonal pair once.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(r, c);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            return 0.0;
        }
        self.data[self.idx(r, c)]
    }

    pub fn add_diagonal(&mut self, shift: f64) {
        for i in 0..self.n {
            let k = self.idx(i, i);
            self.data[k] += shift;
        }
    }

    pub fn max_abs_diagonal(&self) -> f64 {
        (0..self.n).map(|i| self.data[self.idx(i, i)].abs()).fold(0.0, f64::max)
    }

    /// In-place Cholesky `A = L Lᵀ`. Returns `None` when a pivot is not
    /// strictly positive.
    pub fn cholesky(mut self) -> Option<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = i.saturating_sub(bw).max(j.saturating_sub(bw));
                let mut s = self.data[self.idx(i, j)];
                for k in k0..j {
                    s -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    let k = self.idx(i, i);
                    self.data[k] = s.sqrt();
                } else {
                    let k = self.idx(i, j);
                    self.data[k] = s / self.data[self.idx(j, j)];
                }
            }
        }
        Some(BandedCholesky { inner: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    inner: BandedSpd,
}

impl BandedCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let l = &self.inner;
        let (n, bw) = (l.n, l.bw);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= l.data[l.idx(i, k)] * y[k];
            }
            y[i] = s / l.data[l.idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n.min(i + bw + 1) {
                s -= l.data[l.idx(k, i)] * y[k];
            }
            y[i] = s / l.data[l.idx(i, i)];
        }
        y
    }
}
