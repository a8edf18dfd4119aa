use std::path::PathBuf;

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};

use quc_core::dual_geometry::{coercivity, gauge_bounds, star_shape_check};
use quc_core::estimates::{
    caccioppoli_check, caccioppoli_l1_check, degiorgi_iterate, lipschitz_check, sobolev_stress_check, Affine,
    DeGiorgiOutcome, VerificationReport,
};
use quc_core::expr::BoundaryExpr;
use quc_core::integrand::{isotropic_envelope, normalise, Integrand, Normalised};
use quc_core::qc_analysis::{
    delta_from_h, delta_pairs, estimate_h, eta_identities_check, measure_delta_monotonicity, quasisymmetry_check,
    random_triples, EtaProfile, SamplingPlan,
};
use quc_core::solver::{solve, stress_field, GridProblem, GridSolution, StressField};
use quc_core::{Mat2, Vec2};

use crate::config::{CheckSpec, ExperimentConfig};
use crate::output::{Provenance, Sink};

/// A parsed config together with command-line overrides.
#[derive(Debug, Clone)]
pub struct Session {
    pub config: ExperimentConfig,
    pub integrand: Integrand,
    pub sink: Sink,
    pub seed: u64,
    pub reproducible: bool,
}

/// Command-line settings shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct Globals {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub reproducible: bool,
}

impl Session {
    /// `stem` names the output files unless the config sets `output.name`;
    /// `extra` goes into the provenance line.
    pub fn new(config: ExperimentConfig, text: &str, stem: &str, globals: &Globals, extra: String) -> anyhow::Result<Self> {
        let integrand = config.integrand().map_err(|e| anyhow!("{e}"))?;
        let seed = globals.seed.unwrap_or(config.seed);
        let reproducible = globals.reproducible || config.reproducible;
        let dir = globals
            .out_dir
            .clone()
            .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        let stem = config.output.name.clone().unwrap_or_else(|| stem.to_string());
        let mut tags = vec![format!("seed={seed}"), format!("reproducible={reproducible}")];
        if !extra.is_empty() {
            tags.push(extra);
        }
        let sink = Sink { dir, stem, provenance: Provenance::new(text, tags.join(" ")) };
        Ok(Self { config, integrand, sink, seed, reproducible })
    }

    pub fn problem(&self, n: Option<usize>) -> anyhow::Result<GridProblem> {
        let spec = self.config.problem.as_ref().ok_or_else(|| anyhow!("config has no [problem] section"))?;
        let mut spec = spec.clone();
        if let Some(n) = n {
            spec.n = n;
        }
        spec.build(self.integrand.clone(), self.reproducible).map_err(|e| anyhow!("{e}"))
    }

    pub fn plan(&self) -> SamplingPlan {
        let a = &self.config.analysis;
        SamplingPlan {
            radii: a.radii,
            angles: a.angles,
            random_points: a.random_points,
            seed: self.seed,
            ..SamplingPlan::default()
        }
    }
}

/// One row of the `analyze` CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub check: String,
    pub measured: f64,
    pub bound: Option<f64>,
    /// `measured − bound` for lower bounds, `bound − measured` for upper
    /// bounds; negative means violated.
    pub margin: Option<f64>,
    pub hard: bool,
    pub passed: Option<bool>,
    pub note: String,
}

impl AnalysisRow {
    fn info(check: &str, measured: f64, note: impl Into<String>) -> Self {
        Self { check: check.into(), measured, bound: None, margin: None, hard: false, passed: None, note: note.into() }
    }

    fn lower(check: &str, measured: f64, bound: f64, hard: bool, note: impl Into<String>) -> Self {
        let margin = measured - bound;
        Self {
            check: check.into(),
            measured,
            bound: Some(bound),
            margin: Some(margin),
            hard,
            passed: Some(margin >= 0.0),
            note: note.into(),
        }
    }

    fn upper(check: &str, measured: f64, bound: f64, hard: bool, note: impl Into<String>) -> Self {
        let mut r = Self::lower(check, measured, bound, hard, note);
        r.margin = Some(bound - measured);
        r.passed = Some(measured <= bound);
        r
    }

    pub fn failed(&self) -> bool {
        self.hard && self.passed == Some(false)
    }
}

/// Normalisation, dilatation and gauge-geometry measurements on the integrand.
pub struct Analysis {
    pub rows: Vec<AnalysisRow>,
    pub h_est: f64,
    pub normalised: Normalised,
}

pub fn analyze(s: &Session) -> anyhow::Result<Analysis> {
    let f = &s.integrand;
    let a = &s.config.analysis;
    let mut rows = Vec::new();
    let norm = normalise(f).context("normalising the integrand")?;
    rows.push(AnalysisRow::info("argmin_x", norm.argmin.x, ""));
    rows.push(AnalysisRow::info("argmin_y", norm.argmin.y, ""));
    rows.push(AnalysisRow::info("min_value", norm.min_value, ""));
    rows.push(AnalysisRow::info("i_f", norm.i_f, "inf |DF| on the unit circle around the argmin"));

    let est = estimate_h(f, &s.plan());
    let h = est.h_est;
    let where_ = format!("worst at ({}, {}); {} samples, {} skipped", est.worst_point.x, est.worst_point.y, est.samples, est.skipped);
    match f.h_bound() {
        Some(b) => rows.push(AnalysisRow::upper("dilatation_h", h, b, false, where_)),
        None => rows.push(AnalysisRow::info("dilatation_h", h, where_)),
    }
    if !h.is_finite() {
        bail!("sampled ellipticity ratio is unbounded for {}", f.descriptor());
    }

    let pairs = delta_pairs(f, a.pairs, s.seed);
    let mono = measure_delta_monotonicity(f, &pairs);
    let delta_bound = delta_from_h(h)? - 1e-6;
    rows.push(AnalysisRow::lower("delta_monotonicity", mono.delta_est, delta_bound, true, "bound 2√H/(H+1) − 1e-6"));

    let samples: Vec<(f64, f64)> = pairs.iter().map(|(z, w)| (z.norm().max(1e-12), w.norm().max(1e-12))).collect();
    let eta = eta_identities_check(&EtaProfile::h(h), &samples, 1e-12);
    let worst = eta.submultiplicative_excess.max(eta.reflection_error).max(eta.composition_error);
    rows.push(AnalysisRow::upper(
        "eta_identities",
        worst,
        1e-12,
        true,
        eta.first_violation.unwrap_or_default(),
    ));

    let qs = quasisymmetry_check(f, &random_triples(a.triples, 10.0, s.seed.wrapping_add(1)), h);
    rows.push(AnalysisRow::info("quasisymmetry_c", qs.empirical_c, format!("{} triples", qs.samples)));

    let env = isotropic_envelope(f, 64, 64);
    rows.push(AnalysisRow::lower("envelope_increasing", env.is_strictly_increasing() as u8 as f64, 1.0, false, ""));
    rows.push(AnalysisRow::lower("envelope_convex", env.is_convex() as u8 as f64, 1.0, false, ""));
    rows.push(AnalysisRow::info("envelope_doubling", env.doubling_ratio(h), "max a(2t)/(a(t) η_H(2))"));

    let dirs: Vec<Vec2> = (0..128)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / 128.0;
            Vec2::new(t.cos(), t.sin())
        })
        .collect();
    let radii: Vec<f64> = (0..64).map(|j| 10f64.powf(-2.0 + 4.0 * j as f64 / 63.0)).collect();
    let star = star_shape_check(f, &dirs, &radii)?;
    rows.push(AnalysisRow::lower("star_shape_margin", star.min_margin, -1e-9, true, "128 rays × 64 radii"));

    let co = coercivity(f, 32, 1e3, h)?;
    rows.push(AnalysisRow::lower(
        "coercivity_exponent",
        co.exponent,
        1.0 + 1.0 / h - 0.05,
        false,
        "log(G(te)/G(e))/log t at t = 1e3",
    ));
    rows.push(AnalysisRow::info("coercivity_constant", co.constant, "min G(y)/|y|^{1+1/H} for |y| > 1"));
    Ok(Analysis { rows, h_est: h, normalised: norm })
}

/// Nodal dump row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRow {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub du1: f64,
    pub du2: f64,
    pub v1: f64,
    pub v2: f64,
    pub dv11: Option<f64>,
    pub dv12: Option<f64>,
    pub dv21: Option<f64>,
    pub dv22: Option<f64>,
}

/// Per-triangle dump row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleRow {
    pub triangle: usize,
    pub n0: usize,
    pub n1: usize,
    pub n2: usize,
    pub bx: f64,
    pub by: f64,
    pub du1: f64,
    pub du2: f64,
    pub v1: f64,
    pub v2: f64,
    pub dv11: f64,
    pub dv12: f64,
    pub dv21: f64,
    pub dv22: f64,
    pub energy_density: f64,
}

/// Solution dump: nodes touching the domain (patch averages of `Du` and
/// `V`, recovered `DV`) and every triangle.
pub fn solution_rows(sol: &GridSolution, st: &StressField) -> (Vec<NodeRow>, Vec<TriangleRow>) {
    let p = &sol.problem;
    let mut nodes = Vec::new();
    for a in 0..p.n * p.n {
        let patch = p.node_triangles(a);
        if patch.is_empty() {
            continue;
        }
        let m = patch.len() as f64;
        let du = patch.iter().fold(Vec2::zeros(), |s, &t| s + sol.du[t]) / m;
        let v = patch.iter().fold(Vec2::zeros(), |s, &t| s + sol.v[t]) / m;
        let dv: Option<Mat2> = st.dv_nodal[a];
        let x = p.coords(a);
        nodes.push(NodeRow {
            x: x.x,
            y: x.y,
            u: sol.u[a],
            du1: du.x,
            du2: du.y,
            v1: v.x,
            v2: v.y,
            dv11: dv.map(|d| d[(0, 0)]),
            dv12: dv.map(|d| d[(0, 1)]),
            dv21: dv.map(|d| d[(1, 0)]),
            dv22: dv.map(|d| d[(1, 1)]),
        });
    }
    let tris = p
        .triangles()
        .iter()
        .enumerate()
        .map(|(k, t)| TriangleRow {
            triangle: k,
            n0: t.nodes[0],
            n1: t.nodes[1],
            n2: t.nodes[2],
            bx: t.barycenter.x,
            by: t.barycenter.y,
            du1: sol.du[k].x,
            du2: sol.du[k].y,
            v1: sol.v[k].x,
            v2: sol.v[k].y,
            dv11: st.dv[k][(0, 0)],
            dv12: st.dv[k][(0, 1)],
            dv21: st.dv[k][(1, 0)],
            dv22: st.dv[k][(1, 1)],
            energy_density: p.integrand.eval(&sol.du[k]),
        })
        .collect();
    (nodes, tris)
}

/// Summary of a solve, one row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRow {
    pub n: usize,
    pub integrand: String,
    pub energy: f64,
    pub residual: f64,
    pub initial_residual: f64,
    pub tolerance: f64,
    pub newton_iterations: usize,
    pub gd_iterations: usize,
    pub converged: bool,
    pub divergence: f64,
}

pub struct Solved {
    pub solution: GridSolution,
    pub stress: StressField,
    pub files: Vec<PathBuf>,
}

impl Solved {
    pub fn summary(&self) -> SolveRow {
        let s = &self.solution;
        SolveRow {
            n: s.problem.n,
            integrand: s.problem.integrand.descriptor(),
            energy: s.energy,
            residual: s.residual,
            initial_residual: s.initial_residual,
            tolerance: s.tolerance,
            newton_iterations: s.newton_iterations,
            gd_iterations: s.gd_iterations,
            converged: s.converged,
            divergence: self.stress.divergence,
        }
    }
}

/// Solves the configured problem and writes `<stem>_solution.csv`,
/// `<stem>_solution.triangles.csv` and `<stem>_solve.csv`; `out` overrides
/// the nodal dump path.
pub fn solve_and_dump(s: &Session, n: Option<usize>, out: Option<PathBuf>) -> anyhow::Result<Solved> {
    let problem = s.problem(n)?;
    let solution = solve(&problem).context("solving the Dirichlet problem")?;
    let stress = stress_field(&solution);
    let (nodes, tris) = solution_rows(&solution, &stress);
    let node_path = out.unwrap_or_else(|| s.sink.path("solution"));
    let tri_path = node_path.with_extension("triangles.csv");
    crate::output::write_csv(&node_path, &s.sink.provenance, &nodes)?;
    crate::output::write_csv(&tri_path, &s.sink.provenance, &tris)?;
    let mut solved = Solved { solution, stress, files: vec![node_path, tri_path] };
    let summary = solved.summary();
    solved.files.push(s.sink.write("solve", &[summary])?);
    Ok(solved)
}

/// Max nodal error against a closed-form solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub estimate: String,
    pub n: usize,
    pub exact: String,
    pub max_error: f64,
    pub tol: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeGiorgiRow {
    pub step: usize,
    pub x: f64,
    pub threshold: f64,
    pub below_threshold: bool,
    pub verdict: String,
}

pub fn degiorgi_rows(out: &DeGiorgiOutcome) -> Vec<DeGiorgiRow> {
    out.sequence
        .iter()
        .enumerate()
        .map(|(step, &x)| DeGiorgiRow {
            step,
            x,
            threshold: out.threshold,
            below_threshold: out.below_threshold,
            verdict: out.verdict.as_str().to_string(),
        })
        .collect()
}

/// Rows of one check, ready for CSV.
pub enum CheckRows {
    Reports(Vec<VerificationReport>),
    Oracle(OracleRow),
    DeGiorgi(Vec<DeGiorgiRow>),
}

pub struct CheckOutcome {
    pub name: &'static str,
    pub rows: CheckRows,
    pub summary: String,
    /// The failed hard assertion, if any.
    pub failure: Option<String>,
}

/// What a check may need besides its own parameters.
pub struct CheckInputs<'a> {
    pub solved: Option<&'a Solved>,
    pub h_est: f64,
    pub normalised: Option<&'a Normalised>,
}

fn center(c: &[f64; 2]) -> Vec2 {
    Vec2::new(c[0], c[1])
}

pub fn run_check(check: &CheckSpec, inputs: &CheckInputs) -> anyhow::Result<CheckOutcome> {
    let name = check.name();
    let need = || inputs.solved.ok_or_else(|| anyhow!("{name} needs a solved problem"));
    let out = match check {
        CheckSpec::Caccioppoli { k, ell, rho, radius, center: c, max_ratio } => {
            let sv = need()?;
            let affine = Affine { a: Vec2::new(ell[0], ell[1]), k: *k };
            let mut r =
                caccioppoli_check(&sv.solution, &sv.stress, &affine, *rho, *radius, &center(c), inputs.h_est)?;
            r.slack = Some(*max_ratio);
            r.holds = Some(r.ratio <= *max_ratio);
            let failure = (r.holds == Some(false)).then(|| format!("caccioppoli ratio {} exceeds {max_ratio}", r.ratio));
            let summary = format!(
                "ratio {:.6e} (slack {max_ratio}), |A(l,rho)| = {} triangles, {} straddling",
                r.ratio, r.triangles_inner, r.straddling
            );
            CheckOutcome { name, rows: CheckRows::Reports(vec![r]), summary, failure }
        }
        CheckSpec::CaccioppoliL1 { radius, center: c } => {
            let sv = need()?;
            let r = caccioppoli_l1_check(&sv.solution, &sv.stress, *radius, &center(c))?;
            let summary = format!("empirical C {:.6e}", r.ratio);
            CheckOutcome { name, rows: CheckRows::Reports(vec![r]), summary, failure: None }
        }
        CheckSpec::Sobolev { radius, center: c } => {
            let sv = need()?;
            let norm = inputs.normalised.ok_or_else(|| anyhow!("sobolev needs the normalisation data"))?;
            let rows = sobolev_stress_check(&sv.solution, &sv.stress, *radius, &center(c), inputs.h_est, norm)?;
            let summary = format!("empirical C: DV {:.6e}, V {:.6e}", rows[0].ratio, rows[1].ratio);
            CheckOutcome { name, rows: CheckRows::Reports(rows.to_vec()), summary, failure: None }
        }
        CheckSpec::Lipschitz { radius, center: c, expect, tol } => {
            let sv = need()?;
            let r = lipschitz_check(&sv.solution, *radius, &center(c))?;
            let failure = expect
                .filter(|e| (r.ratio - e).abs() > *tol)
                .map(|e| format!("lipschitz ratio {} differs from {e} by more than {tol}", r.ratio));
            let summary = format!("ratio {:.12}", r.ratio);
            CheckOutcome { name, rows: CheckRows::Reports(vec![r]), summary, failure }
        }
        CheckSpec::Degiorgi { x0, c, b, r, n_dim } => {
            let o = degiorgi_iterate(*x0, *c, *b, *r, *n_dim)?;
            let summary = format!(
                "X0 = {x0}, threshold {}, {} after {} steps",
                o.threshold,
                o.verdict.as_str(),
                o.sequence.len() - 1
            );
            let failure = (o.below_threshold && o.verdict != quc_core::estimates::Verdict::Vanishes)
                .then(|| format!("degiorgi iterates {} below the threshold", o.verdict.as_str()));
            CheckOutcome { name, rows: CheckRows::DeGiorgi(degiorgi_rows(&o)), summary, failure }
        }
        CheckSpec::Oracle { exact, tol } => {
            let sv = need()?;
            let expr = BoundaryExpr::parse(exact)?;
            let p = &sv.solution.problem;
            let mut err: f64 = 0.0;
            for a in 0..p.n * p.n {
                if p.node_triangles(a).is_empty() {
                    continue;
                }
                let x = p.coords(a);
                err = err.max((sv.solution.u[a] - expr.eval(x.x, x.y)?).abs());
            }
            let row = OracleRow {
                estimate: "oracle".into(),
                n: p.n,
                exact: exact.clone(),
                max_error: err,
                tol: *tol,
                holds: err <= *tol,
            };
            let failure = (!row.holds).then(|| format!("oracle error {err:e} exceeds {tol:e}"));
            CheckOutcome { name, rows: CheckRows::Oracle(row), summary: format!("max nodal error {err:.3e}"), failure }
        }
    };
    Ok(out)
}

pub fn write_check(sink: &Sink, suffix: &str, rows: &CheckRows) -> anyhow::Result<PathBuf> {
    match rows {
        CheckRows::Reports(r) => sink.write(suffix, r),
        CheckRows::Oracle(r) => sink.write(suffix, std::slice::from_ref(r)),
        CheckRows::DeGiorgi(r) => sink.write(suffix, r),
    }
}

/// Gauge table and bound rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeTableRow {
    pub k: f64,
    pub theta: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeBoundRow {
    pub k: f64,
    pub sup: f64,
    pub inf: f64,
    pub sup_inf_ratio: f64,
    pub lipschitz: f64,
    pub lipschitz_bound: f64,
    pub lipschitz_ok: bool,
    pub gap_h: f64,
    pub gap_measured: f64,
    pub gap_profile: f64,
    pub gap_empirical_c: f64,
}

pub fn gauge_tables(s: &Session, levels: &[f64], h_est: f64) -> anyhow::Result<(Vec<GaugeTableRow>, Vec<GaugeBoundRow>)> {
    let g = &s.config.gauge;
    let mut table = Vec::new();
    let mut bounds = Vec::new();
    for &k in levels {
        let h = k / g.gap_ratio;
        let sample = gauge_bounds(&s.integrand, k, h_est, g.angles, Some(h))?;
        table.extend(sample.angles.iter().zip(&sample.values).map(|(&theta, &v)| GaugeTableRow { k, theta, g: v }));
        let gap = sample.gap.clone().expect("gap requested");
        bounds.push(GaugeBoundRow {
            k,
            sup: sample.sup,
            inf: sample.inf,
            sup_inf_ratio: sample.sup_inf_ratio(),
            lipschitz: sample.lipschitz,
            lipschitz_bound: sample.lipschitz_bound,
            lipschitz_ok: sample.lipschitz_ok(),
            gap_h: gap.h,
            gap_measured: gap.measured,
            gap_profile: gap.profile,
            gap_empirical_c: gap.empirical_c,
        });
    }
    Ok((table, bounds))
}

/// Result of `run`: every file written and the first failed assertion.
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
    pub failure: Option<String>,
}

/// normalise → analyze → solve → checks, writing one CSV per stage or check.
pub fn run(s: &Session) -> anyhow::Result<RunOutcome> {
    let mut files = Vec::new();
    let mut lines = Vec::new();
    let mut failure: Option<String> = None;
    let fail = |msg: String, failure: &mut Option<String>| {
        if failure.is_none() {
            *failure = Some(msg);
        }
    };

    let analysis = analyze(s)?;
    files.push(s.sink.write("analyze", &analysis.rows)?);
    let bad: Vec<&AnalysisRow> = analysis.rows.iter().filter(|r| r.failed()).collect();
    lines.push(format!(
        "analyze: H_est = {:.6}, i_F = {:.6}, {}",
        analysis.h_est,
        analysis.normalised.i_f,
        if bad.is_empty() { "PASS".to_string() } else { format!("FAIL ({})", bad[0].check) }
    ));
    if let Some(r) = bad.first() {
        fail(format!("analyze: {} (measured {}, bound {:?})", r.check, r.measured, r.bound), &mut failure);
    }

    let solved = match &s.config.problem {
        Some(_) => {
            let sv = solve_and_dump(s, None, None)?;
            files.extend(sv.files.iter().cloned());
            let sol = &sv.solution;
            let ok = sol.converged;
            lines.push(format!(
                "solve: n = {}, energy {:.12e}, residual {:.3e}, {} newton + {} gradient steps, {}",
                sol.problem.n,
                sol.energy,
                sol.residual,
                sol.newton_iterations,
                sol.gd_iterations,
                if ok { "PASS" } else { "FAIL (solver non-converged)" }
            ));
            if !ok {
                fail("solver non-converged".to_string(), &mut failure);
            }
            Some(sv)
        }
        None => None,
    };
    let converged = solved.as_ref().is_none_or(|sv| sv.solution.converged);

    for (i, check) in s.config.checks.iter().enumerate() {
        let label = format!("{}[{i}]", check.name());
        if check.needs_solution() && !converged {
            lines.push(format!("{label}: SKIPPED (solver non-converged)"));
            continue;
        }
        let inputs =
            CheckInputs { solved: solved.as_ref(), h_est: analysis.h_est, normalised: Some(&analysis.normalised) };
        let out = run_check(check, &inputs).with_context(|| label.clone())?;
        files.push(write_check(&s.sink, &format!("{i}_{}", check.name().replace('-', "_")), &out.rows)?);
        match &out.failure {
            None => lines.push(format!("{label}: {} PASS", out.summary)),
            Some(f) => {
                lines.push(format!("{label}: {} FAIL ({f})", out.summary));
                fail(format!("{label}: {f}"), &mut failure);
            }
        }
    }
    Ok(RunOutcome { files, lines, failure })
}
