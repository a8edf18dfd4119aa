use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use quc_core::expr::BoundaryExpr;
use quc_core::integrand::{DerivativeMode, Integrand, IntegrandSpec};
use quc_core::solver::{BoundaryData, Domain, GridProblem, Method, SolverOptions};
use quc_core::{QucError, Vec2};

/// One experiment: an integrand, an optional grid problem and the checks to
/// run on its solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub integrand: IntegrandSpec,
    #[serde(default)]
    pub derivative: Derivative,
    #[serde(default)]
    pub problem: Option<ProblemSpec>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub gauge: GaugeSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub reproducible: bool,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Derivative {
    #[default]
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default)]
    pub domain: DomainSpec,
    #[serde(default)]
    pub mask: Option<MaskSpec>,
    pub n: usize,
    /// Dirichlet data as an expression in `x` and `y`.
    pub boundary: String,
    #[serde(default)]
    pub solver: SolverSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Default for DomainSpec {
    fn default() -> Self {
        Self { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskSpec {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub tol_rel: f64,
    pub max_iter: usize,
    pub gd_max_iter: usize,
    pub method: MethodSpec,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self { tol_rel: o.tol_rel, max_iter: o.max_iter, gd_max_iter: o.gd_max_iter, method: MethodSpec::Auto }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    #[default]
    Auto,
    Newton,
    GradientDescent,
}

/// A check run on the solved problem (or, for `degiorgi`, on its own).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    Caccioppoli {
        #[serde(default)]
        k: f64,
        #[serde(default)]
        ell: [f64; 2],
        rho: f64,
        radius: f64,
        center: [f64; 2],
        #[serde(default = "default_slack")]
        max_ratio: f64,
    },
    CaccioppoliL1 {
        radius: f64,
        center: [f64; 2],
    },
    Sobolev {
        radius: f64,
        center: [f64; 2],
    },
    Lipschitz {
        radius: f64,
        center: [f64; 2],
        /// Required ratio, checked to `tol` when given.
        #[serde(default)]
        expect: Option<f64>,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Degiorgi {
        x0: f64,
        #[serde(default = "one")]
        c: f64,
        b: f64,
        #[serde(default = "one")]
        r: f64,
        #[serde(default = "two")]
        n_dim: usize,
    },
    /// Maximum nodal error against a closed-form solution.
    Oracle {
        exact: String,
        tol: f64,
    },
}

fn default_slack() -> f64 {
    quc_core::estimates::CACCIOPPOLI_SLACK
}

fn default_tol() -> f64 {
    1e-8
}

fn one() -> f64 {
    1.0
}

fn two() -> usize {
    2
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::Caccioppoli { .. } => "caccioppoli",
            CheckSpec::CaccioppoliL1 { .. } => "caccioppoli-l1",
            CheckSpec::Sobolev { .. } => "sobolev",
            CheckSpec::Lipschitz { .. } => "lipschitz",
            CheckSpec::Degiorgi { .. } => "degiorgi",
            CheckSpec::Oracle { .. } => "oracle",
        }
    }

    pub fn needs_solution(&self) -> bool {
        !matches!(self, CheckSpec::Degiorgi { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    pub radii: usize,
    pub angles: usize,
    pub random_points: usize,
    pub pairs: usize,
    pub triples: usize,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self { radii: 64, angles: 128, random_points: 10_000, pairs: 10_000, triples: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaugeSpec {
    pub levels: Vec<f64>,
    pub angles: usize,
    /// The level gap is measured between `g_{k/gap_ratio}` and `g_k`.
    pub gap_ratio: f64,
}

impl Default for GaugeSpec {
    fn default() -> Self {
        Self { levels: vec![0.5, 1.0, 2.0], angles: 256, gap_ratio: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: Option<String>,
    /// File name stem; defaults to the config file stem.
    pub name: Option<String>,
}

/// Parse or validation failure, naming the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.path.is_empty(), self.line) {
            (true, Some(l)) => write!(f, "line {l}: {}", self.message),
            (true, None) => write!(f, "{}", self.message),
            (false, Some(l)) => write!(f, "`{}` (line {l}): {}", self.path, self.message),
            (false, None) => write!(f, "`{}`: {}", self.path, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn constraint(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError { path: path.into(), line: None, message: message.into() }
}

fn from_core(e: QucError) -> ConfigError {
    match e {
        QucError::InvalidParameter { name, reason } => constraint(name, reason),
        other => constraint("", other.to_string()),
    }
}

/// Parses and validates a config held in memory.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError {
        path: String::new(),
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ConfigError {
            path: if path == "." { String::new() } else { path },
            line: inner.span().map(|s| line_of(text, s.start)),
            message: inner.message().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads, parses and validates a config file.
pub fn parse_config(path: &Path) -> anyhow::Result<(ExperimentConfig, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    let cfg = parse_config_str(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    Ok((cfg, text))
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(constraint(path, format!("must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    /// Checks every parameter against the preconditions of the operation
    /// that will consume it.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.integrand()?;
        if let Some(p) = &self.problem {
            p.build(self.integrand()?, self.reproducible)?;
        }
        for (i, c) in self.checks.iter().enumerate() {
            let at = |key: &str| format!("checks[{i}].{key}");
            if c.needs_solution() && self.problem.is_none() {
                return Err(constraint(format!("checks[{i}]"), "needs a [problem] section"));
            }
            match c {
                CheckSpec::Caccioppoli { rho, radius, max_ratio, .. } => {
                    positive(&at("rho"), *rho)?;
                    positive(&at("radius"), *radius)?;
                    positive(&at("max_ratio"), *max_ratio)?;
                    if rho >= radius {
                        return Err(constraint(at("rho"), format!("must be below radius = {radius}")));
                    }
                }
                CheckSpec::CaccioppoliL1 { radius, .. }
                | CheckSpec::Sobolev { radius, .. }
                | CheckSpec::Lipschitz { radius, .. } => positive(&at("radius"), *radius)?,
                CheckSpec::Degiorgi { x0, c, b, r, n_dim } => {
                    if !(*x0 >= 0.0 && x0.is_finite()) {
                        return Err(constraint(at("x0"), "must be finite and nonnegative"));
                    }
                    positive(&at("c"), *c)?;
                    positive(&at("b"), *b)?;
                    positive(&at("r"), *r)?;
                    if *n_dim < 2 {
                        return Err(constraint(at("n_dim"), "must be at least 2"));
                    }
                }
                CheckSpec::Oracle { exact, tol } => {
                    BoundaryExpr::parse(exact).map_err(|e| constraint(at("exact"), e.to_string()))?;
                    positive(&at("tol"), *tol)?;
                }
            }
        }
        let a = &self.analysis;
        for (key, v) in [("radii", a.radii), ("angles", a.angles)] {
            if v < 2 {
                return Err(constraint(format!("analysis.{key}"), "need at least 2"));
            }
        }
        if self.gauge.angles < 3 {
            return Err(constraint("gauge.angles", "need at least 3"));
        }
        for (i, k) in self.gauge.levels.iter().enumerate() {
            positive(&format!("gauge.levels[{i}]"), *k)?;
        }
        if !(self.gauge.gap_ratio > 1.0 && self.gauge.gap_ratio <= 2.0) {
            return Err(constraint("gauge.gap_ratio", "must lie in (1, 2]"));
        }
        Ok(())
    }

    pub fn integrand(&self) -> Result<Integrand, ConfigError> {
        let f = self.integrand.build_at("integrand").map_err(from_core)?;
        Ok(match self.derivative {
            Derivative::Analytic => f.with_mode(DerivativeMode::Analytic),
            Derivative::FiniteDifference => f.with_mode(DerivativeMode::FiniteDifference),
        })
    }
}

impl ProblemSpec {
    pub fn build(&self, integrand: Integrand, reproducible: bool) -> Result<GridProblem, ConfigError> {
        let d = &self.domain;
        let mut domain = Domain::rectangle(d.x0, d.x1, d.y0, d.y1);
        if !(d.x0 < d.x1 && d.y0 < d.y1) || ![d.x0, d.x1, d.y0, d.y1].iter().all(|v| v.is_finite()) {
            return Err(constraint("problem.domain", "need finite x0 < x1 and y0 < y1"));
        }
        if let Some(m) = &self.mask {
            positive("problem.mask.radius", m.radius)?;
            domain = domain.with_mask(Vec2::new(m.center[0], m.center[1]), m.radius);
        }
        let expr = BoundaryExpr::parse(&self.boundary).map_err(|e| constraint("problem.boundary", e.to_string()))?;
        let s = &self.solver;
        positive("problem.solver.tol_rel", s.tol_rel)?;
        if s.max_iter == 0 {
            return Err(constraint("problem.solver.max_iter", "must be at least 1"));
        }
        let options = SolverOptions {
            tol_rel: s.tol_rel,
            max_iter: s.max_iter,
            gd_max_iter: s.gd_max_iter,
            method: match s.method {
                MethodSpec::Auto => Method::Auto,
                MethodSpec::Newton => Method::Newton,
                MethodSpec::GradientDescent => Method::GradientDescent,
            },
            reproducible,
        };
        let p = GridProblem::new(domain, self.n, BoundaryData::Expression(expr), integrand).map_err(|e| match e {
            QucError::InvalidParameter { name, reason } => constraint(format!("problem.{name}"), reason),
            other => constraint("problem", other.to_string()),
        })?;
        Ok(p.with_options(options))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[integrand]\nkind = \"power\"\np = 3.0\n\n[problem]\nn = 33\nboundary = \"x^2 - y^2\"\n\n\
                        [[checks]]\nkind = \"lipschitz\"\nradius = 0.2\ncenter = [0.5, 0.5]\n";

    #[test]
    fn accepts_basic_config() {
        let cfg = parse_config_str(BASE).unwrap();
        assert_eq!(cfg.problem.unwrap().n, 33);
        assert_eq!(cfg.checks[0].name(), "lipschitz");
    }

    #[test]
    fn rejects_small_exponent() {
        let e = parse_config_str(&BASE.replace("p = 3.0", "p = 0.5")).unwrap_err();
        assert_eq!(e.path, "integrand.p");
        assert!(e.to_string().contains("exponent must exceed 1"), "{e}");
    }

    #[test]
    fn unknown_key_names_its_path() {
        let e = parse_config_str(&BASE.replace("n = 33", "n = 33\nmesh_style = \"quad\"")).unwrap_err();
        assert!(e.path.starts_with("problem"), "{e:?}");
        assert!(e.message.contains("mesh_style"), "{e}");
        assert_eq!(e.line, Some(7));
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let e = parse_config_str("[integrand]\nkind = \"power\"\np = = 3\n").unwrap_err();
        assert_eq!(e.line, Some(3), "{e}");
    }

    #[test]
    fn check_constraints_use_indices() {
        let bad = format!("{BASE}\n[[checks]]\nkind = \"caccioppoli\"\nrho = 0.5\nradius = 0.4\ncenter = [0.5, 0.5]\n");
        let e = parse_config_str(&bad).unwrap_err();
        assert_eq!(e.path, "checks[1].rho");
    }

    #[test]
    fn bad_boundary_expression() {
        let e = parse_config_str(&BASE.replace("x^2 - y^2", "x^2 - z")).unwrap_err();
        assert_eq!(e.path, "problem.boundary");
    }
}
