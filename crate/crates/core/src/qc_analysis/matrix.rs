use nalgebra::DMatrix;

use crate::error::{invalid, QucError, Result};
use crate::linalg::sym_eigenvalues;

/// Both sides of `(PS, SP) ≥ (λ_min(P)/λ_max(P))·|PS|²` with Frobenius pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixInequality {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

pub const MATRIX_INEQUALITY_TOL: f64 = 1e-12;

pub fn matrix_inequality_check(p: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<MatrixInequality> {
    let n = p.nrows();
    if p.ncols() != n || s.nrows() != n || s.ncols() != n {
        return Err(QucError::ShapeMismatch(format!(
            "P is {}x{}, S is {}x{}",
            p.nrows(),
            p.ncols(),
            s.nrows(),
            s.ncols()
        )));
    }
    let scale = p.amax().max(1.0);
    if (p - p.transpose()).amax() > 1e-12 * scale {
        return Err(invalid("P", "matrix must be symmetric"));
    }
    if (s - s.transpose()).amax() > 1e-12 * s.amax().max(1.0) {
        return Err(invalid("S", "matrix must be symmetric"));
    }
    let ev = sym_eigenvalues(p);
    let (lo, hi) = (ev[0], ev[n - 1]);
    if !(lo > 0.0) {
        return Err(invalid("P", "matrix must be positive definite"));
    }
    let ps = p * s;
    let sp = s * p;
    let lhs = ps.dot(&sp);
    let rhs = lo / hi * ps.norm_squared();
    let margin = lhs - rhs;
    Ok(MatrixInequality { lhs, rhs, margin, holds: margin >= -MATRIX_INEQUALITY_TOL })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_example() {
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let s = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let r = matrix_inequality_check(&p, &s).unwrap();
        assert_eq!(r.lhs, 4.0);
        assert_eq!(r.rhs, 2.5);
        assert!(r.holds);
    }

    #[test]
    fn identity_is_equality() {
        let p = DMatrix::<f64>::identity(3, 3);
        let s = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.5, 2.0, -1.0, 0.3, 0.5, 0.3, 4.0]);
        let r = matrix_inequality_check(&p, &s).unwrap();
        assert!(r.margin.abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        let p = DMatrix::<f64>::identity(2, 2);
        let s = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(matrix_inequality_check(&p, &s), Err(QucError::ShapeMismatch(_))));
    }
}
