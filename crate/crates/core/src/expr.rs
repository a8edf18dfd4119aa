//! Boundary-data expressions in `x` and `y`.

use std::fmt;

use crate::error::{QucError, Result};

/// Arithmetic expression over `x`, `y` (`+ - * / ^`, `abs`, `sqrt`, `exp`,
/// `ln`, trigonometric functions, `pi`, `e`).
#[derive(Clone)]
pub struct BoundaryExpr {
    source: String,
    expr: meval::Expr,
}

impl fmt::Debug for BoundaryExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoundaryExpr({:?})", self.source)
    }
}

impl PartialEq for BoundaryExpr {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl BoundaryExpr {
    pub fn parse(source: &str) -> Result<Self> {
        let expr: meval::Expr = source.parse().map_err(|e| QucError::Expression(format!("{source:?}: {e}")))?;
        // reject free variables other than x and y up front
        let _ = expr.clone().bind2("x", "y").map_err(|e| QucError::Expression(format!("{source:?}: {e}")))?;
        Ok(Self { source: source.to_string(), expr })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluates at every point; non-finite results are errors.
    pub fn eval_many(&self, pts: impl Iterator<Item = (f64, f64)>) -> Result<Vec<f64>> {
        let f = self.expr.clone().bind2("x", "y").map_err(|e| QucError::Expression(e.to_string()))?;
        pts.map(|(x, y)| {
            let v = f(x, y);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(QucError::Expression(format!("{:?} is not finite at ({x}, {y})", self.source)))
            }
        })
        .collect()
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.eval_many(std::iter::once((x, y)))?[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_oracles() {
        let e = BoundaryExpr::parse("x^2 - y^2").unwrap();
        assert_eq!(e.eval(3.0, 1.0).unwrap(), 8.0);
        let r = BoundaryExpr::parse("sqrt(sqrt(x^2 + y^2))").unwrap();
        assert!((r.eval(3.0, 4.0).unwrap() - 5f64.sqrt()).abs() < 1e-15);
        let a = BoundaryExpr::parse("abs(x) * exp(0) + 2*y/4").unwrap();
        assert_eq!(a.eval(-2.0, 1.0).unwrap(), 2.5);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(BoundaryExpr::parse("x +* y").is_err());
        assert!(BoundaryExpr::parse("x + z").is_err());
        assert!(BoundaryExpr::parse("1/x").unwrap().eval(0.0, 0.0).is_err());
    }
}
