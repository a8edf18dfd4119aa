use serde::{Deserialize, Serialize};

use crate::error::{invalid, QucError, Result};
use crate::linalg::{Mat2, Vec2};
use crate::regularize::{moreau_yosida, mollify_plus_quadratic, strongly_elliptic_approx};

use super::{
    combine, make_anisotropic_quadratic, make_blend, make_finsler, make_power, make_uhlenbeck_with_bound,
    BlendParams, Combinator, Integrand, RadialProfile, DEFAULT_RATIO_BOUND,
};

/// Serialisable description of an integrand, tagged by `kind`.
///
/// ```toml
/// kind = "sum"
/// [[parts]]
/// kind = "power"
/// p = 3.0
/// [[parts]]
/// kind = "power"
/// p = 1.5
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntegrandSpec {
    Power {
        p: f64,
    },
    AnisotropicQuadratic {
        a: [[f64; 2]; 2],
    },
    /// Either `terms = [[c, p], ...]` for `Σ c t^p/p` or `knot` for the
    /// quadratic-linear profile.
    Uhlenbeck {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        terms: Option<Vec<[f64; 2]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        knot: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ratio_bound: Option<f64>,
    },
    Finsler {
        terms: Vec<[f64; 2]>,
        b: [[f64; 2]; 2],
        c: [f64; 2],
    },
    Blend {
        p: f64,
        q: f64,
        w: [f64; 2],
        eps: f64,
    },
    Sum {
        parts: Vec<IntegrandSpec>,
    },
    Scaled {
        lambda: f64,
        inner: Box<IntegrandSpec>,
    },
    Shifted {
        offset: [f64; 2],
        inner: Box<IntegrandSpec>,
    },
    AffineAdd {
        slope: [f64; 2],
        #[serde(default)]
        constant: f64,
        inner: Box<IntegrandSpec>,
    },
    Mollified {
        epsilon: f64,
        mu: f64,
        inner: Box<IntegrandSpec>,
    },
    Moreau {
        delta: f64,
        inner: Box<IntegrandSpec>,
    },
    StronglyElliptic {
        n: u32,
        inner: Box<IntegrandSpec>,
    },
}

fn mat(a: &[[f64; 2]; 2]) -> Mat2 {
    Mat2::new(a[0][0], a[0][1], a[1][0], a[1][1])
}

fn vec2(v: &[f64; 2]) -> Vec2 {
    Vec2::new(v[0], v[1])
}

fn prefix(path: &str, e: QucError) -> QucError {
    match e {
        QucError::InvalidParameter { name, reason } => {
            QucError::InvalidParameter { name: format!("{path}.{name}"), reason }
        }
        QucError::ProfileRatio { .. } => QucError::InvalidParameter { name: path.to_string(), reason: e.to_string() },
        other => other,
    }
}

fn power_sum(terms: &[[f64; 2]]) -> RadialProfile {
    RadialProfile::PowerSum(terms.iter().map(|t| (t[0], t[1])).collect())
}

impl IntegrandSpec {
    pub fn build(&self) -> Result<Integrand> {
        self.build_at("integrand")
    }

    /// Builds the integrand; parameter errors carry the dotted key path
    /// starting at `path`.
    pub fn build_at(&self, path: &str) -> Result<Integrand> {
        let r = match self {
            IntegrandSpec::Power { p } => make_power(*p),
            IntegrandSpec::AnisotropicQuadratic { a } => make_anisotropic_quadratic(mat(a)),
            IntegrandSpec::Uhlenbeck { terms, knot, ratio_bound } => {
                let profile = match (terms, knot) {
                    (Some(t), None) => power_sum(t),
                    (None, Some(k)) => RadialProfile::QuadraticLinear { knot: *k },
                    _ => return Err(invalid(&format!("{path}.terms"), "give exactly one of `terms` or `knot`")),
                };
                make_uhlenbeck_with_bound(profile, ratio_bound.unwrap_or(DEFAULT_RATIO_BOUND))
            }
            IntegrandSpec::Finsler { terms, b, c } => make_finsler(power_sum(terms), mat(b), vec2(c)),
            IntegrandSpec::Blend { p, q, w, eps } => {
                make_blend(BlendParams { p: *p, q: *q, w: vec2(w), eps: *eps })
            }
            IntegrandSpec::Sum { parts } => {
                let built = parts
                    .iter()
                    .enumerate()
                    .map(|(i, s)| s.build_at(&format!("{path}.parts[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                combine(Combinator::Sum(built))
            }
            IntegrandSpec::Scaled { lambda, inner } => {
                let inner = inner.build_at(&format!("{path}.inner"))?;
                combine(Combinator::Scaled { lambda: *lambda, inner })
            }
            IntegrandSpec::Shifted { offset, inner } => {
                let inner = inner.build_at(&format!("{path}.inner"))?;
                combine(Combinator::Shifted { offset: vec2(offset), inner })
            }
            IntegrandSpec::AffineAdd { slope, constant, inner } => {
                let inner = inner.build_at(&format!("{path}.inner"))?;
                combine(Combinator::AffineAdd { slope: vec2(slope), constant: *constant, inner })
            }
            IntegrandSpec::Mollified { epsilon, mu, inner } => {
                let inner = inner.build_at(&format!("{path}.inner"))?;
                mollify_plus_quadratic(&inner, *epsilon, *mu)
            }
            IntegrandSpec::Moreau { delta, inner } => {
                let inner = inner.build_at(&format!("{path}.inner"))?;
                moreau_yosida(&inner, *delta)
            }
            IntegrandSpec::StronglyElliptic { n, inner } => {
                let inner = inner.build_at(&format!("{path}.inner"))?;
                strongly_elliptic_approx(&inner, *n)
            }
        };
        r.map_err(|e| prefix(path, e))
    }
}
