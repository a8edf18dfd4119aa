use crate::error::{invalid, QucError, Result};

/// Radial profile `G` of an Uhlenbeck integrand `F(z) = G(|z|)`.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialProfile {
    /// `G(t) = Σ c t^p / p` with `c > 0`, `p > 1`.
    PowerSum(Vec<(f64, f64)>),
    /// `G(t) = t²` below the knot and `2·knot·t − knot²` above.
    QuadraticLinear { knot: f64 },
}

/// Default bound `C` for the ratio check `t G''/G' ∈ [1/C, C]`.
pub const DEFAULT_RATIO_BOUND: f64 = 1e3;

impl RadialProfile {
    pub fn power(p: f64) -> Self {
        RadialProfile::PowerSum(vec![(1.0, p)])
    }

    pub fn g(&self, t: f64) -> f64 {
        match self {
            RadialProfile::PowerSum(terms) => terms.iter().map(|&(c, p)| c * t.powf(p) / p).sum(),
            RadialProfile::QuadraticLinear { knot } => {
                if t <= *knot {
                    t * t
                } else {
                    2.0 * knot * t - knot * knot
                }
            }
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        match self {
            RadialProfile::PowerSum(terms) => terms.iter().map(|&(c, p)| c * t.powf(p - 1.0)).sum(),
            RadialProfile::QuadraticLinear { knot } => 2.0 * t.min(*knot),
        }
    }

    pub fn d2(&self, t: f64) -> f64 {
        match self {
            RadialProfile::PowerSum(terms) => {
                terms.iter().map(|&(c, p)| c * (p - 1.0) * t.powf(p - 2.0)).sum()
            }
            RadialProfile::QuadraticLinear { knot } => {
                if t <= *knot {
                    2.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `G'(t)/t`, the tangential Hessian eigenvalue.
    pub fn d1_over_t(&self, t: f64) -> f64 {
        match self {
            RadialProfile::PowerSum(terms) => terms.iter().map(|&(c, p)| c * t.powf(p - 2.0)).sum(),
            RadialProfile::QuadraticLinear { knot } => 2.0 * (t.min(*knot) / t),
        }
    }

    /// Limit of `G'(t)/t` as `t → 0`, which is the Hessian scale at the origin.
    pub fn hessian_at_zero(&self) -> f64 {
        match self {
            RadialProfile::PowerSum(terms) => terms
                .iter()
                .map(|&(c, p)| match p.partial_cmp(&2.0) {
                    Some(std::cmp::Ordering::Less) => f64::INFINITY,
                    Some(std::cmp::Ordering::Equal) => c,
                    _ => 0.0,
                })
                .sum(),
            RadialProfile::QuadraticLinear { .. } => 2.0,
        }
    }

    /// Upper bound on `max(tG''/G', G'/(tG''))` when it is known in closed form.
    pub fn ratio_bound(&self) -> Option<f64> {
        match self {
            RadialProfile::PowerSum(terms) => terms
                .iter()
                .map(|&(_, p)| (p - 1.0).max(1.0 / (p - 1.0)))
                .reduce(f64::max),
            RadialProfile::QuadraticLinear { .. } => None,
        }
    }

    pub fn min_exponent(&self) -> Option<f64> {
        match self {
            RadialProfile::PowerSum(terms) => terms.iter().map(|t| t.1).reduce(f64::min),
            RadialProfile::QuadraticLinear { .. } => None,
        }
    }

    pub fn descriptor(&self) -> String {
        match self {
            RadialProfile::PowerSum(terms) => {
                let parts: Vec<String> = terms.iter().map(|(c, p)| format!("{c}*t^{p}/{p}")).collect();
                parts.join("+")
            }
            RadialProfile::QuadraticLinear { knot } => format!("quadratic_linear(knot={knot})"),
        }
    }

    /// Parameter checks plus the sampled ratio test on 200 log-spaced radii in
    /// `[1e-4, 1e4]`.
    pub fn validate(&self, bound: f64) -> Result<()> {
        match self {
            RadialProfile::PowerSum(terms) => {
                if terms.is_empty() {
                    return Err(invalid("profile", "power sum needs at least one term"));
                }
                for &(c, p) in terms {
                    if !(c > 0.0) || !c.is_finite() {
                        return Err(invalid("coefficient", "must be positive and finite"));
                    }
                    if !(p > 1.0) || !p.is_finite() {
                        return Err(invalid("exponent", "exponent must exceed 1"));
                    }
                }
            }
            RadialProfile::QuadraticLinear { knot } => {
                if !(*knot > 0.0) {
                    return Err(invalid("knot", "must be positive"));
                }
            }
        }
        let n = 200;
        for i in 0..n {
            let t = 10f64.powf(-4.0 + 8.0 * i as f64 / (n - 1) as f64);
            let ratio = t * self.d2(t) / self.d1(t);
            if !(ratio >= 1.0 / bound && ratio <= bound) {
                return Err(QucError::ProfileRatio { t, ratio, lower: 1.0 / bound, upper: bound });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_ratio_is_constant() {
        let g = RadialProfile::power(3.0);
        for t in [1e-3, 0.5, 7.0, 1e3] {
            assert!((t * g.d2(t) / g.d1(t) - 2.0).abs() < 1e-12);
        }
        g.validate(DEFAULT_RATIO_BOUND).unwrap();
    }

    #[test]
    fn quadratic_linear_is_rejected_beyond_knot() {
        let err = RadialProfile::QuadraticLinear { knot: 1.0 }.validate(DEFAULT_RATIO_BOUND).unwrap_err();
        match err {
            QucError::ProfileRatio { t, ratio, .. } => {
                assert!(t > 1.0);
                assert_eq!(ratio, 0.0);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_sublinear_exponent() {
        let err = RadialProfile::power(0.5).validate(DEFAULT_RATIO_BOUND).unwrap_err();
        assert!(err.to_string().contains("exponent must exceed 1"));
    }
}
