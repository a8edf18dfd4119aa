use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail};
use clap::{Args, Parser, Subcommand};

use quc_cli::commands::{self, CheckInputs, Globals, Session};
use quc_cli::config::{parse_config, CheckSpec};
use quc_cli::output::{write_csv, Provenance};
use quc_core::estimates::{degiorgi_iterate, Verdict};

#[derive(Parser, Debug)]
#[command(name = "quc", version, about = "Quasiuniformly convex integrands: analysis, solving and estimate checks")]
struct Cli {
    /// Directory for CSV artifacts (overrides `output.dir`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Random seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sequential assembly, so that repeated runs are bitwise identical.
    #[arg(long, global = true)]
    reproducible: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a config.
    Validate { config: PathBuf },
    /// Normalisation, dilatation and geometry measurements, one row per check.
    Analyze { config: PathBuf },
    /// Solve the Dirichlet problem and dump the solution.
    Solve {
        config: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        /// Path of the nodal dump.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the gauge of `{G ≤ k}` and its bounds.
    Gauge {
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<f64>>,
    },
    /// Solve and run a single estimate check.
    Verify(VerifyArgs),
    /// Iterate the De Giorgi recursion.
    Degiorgi {
        #[arg(long)]
        x0: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 2)]
        n_dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// normalise, analyze, solve, then every configured check.
    Run { config: PathBuf },
}

#[derive(Args, Debug)]
struct VerifyArgs {
    config: PathBuf,
    /// caccioppoli, caccioppoli-l1, sobolev, lipschitz or degiorgi (which
    /// takes its parameters from the config's degiorgi check).
    #[arg(long)]
    check: String,
    #[arg(long, default_value_t = 0.0)]
    k: f64,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [0.0, 0.0])]
    ell: Vec<f64>,
    #[arg(long, default_value_t = 0.2)]
    rho: f64,
    #[arg(long = "R", default_value_t = 0.4)]
    big_r: f64,
    /// Ball center; defaults to the domain center.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    center: Option<Vec<f64>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Status {
    Pass,
    Fail(String),
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "quc".into())
}

fn session(path: &Path, globals: &Globals, extra: String) -> anyhow::Result<Session> {
    let (cfg, text) = parse_config(path)?;
    Session::new(cfg, &text, &stem(path), globals, extra)
}

fn execute(cli: Cli) -> anyhow::Result<Status> {
    let globals = Globals { out_dir: cli.out_dir, seed: cli.seed, reproducible: cli.reproducible };
    match cli.command {
        Command::Validate { config } => {
            let (cfg, _) = parse_config(&config)?;
            let f = cfg.integrand().map_err(|e| anyhow!("{e}"))?;
            println!("{}: ok ({}, {} checks)", config.display(), f.descriptor(), cfg.checks.len());
            Ok(Status::Pass)
        }
        Command::Analyze { config } => {
            let s = session(&config, &globals, String::new())?;
            let a = commands::analyze(&s)?;
            let path = s.sink.write("analyze", &a.rows)?;
            for r in &a.rows {
                let verdict = match r.passed {
                    Some(true) => "ok",
                    Some(false) if r.hard => "FAIL",
                    Some(false) => "below",
                    None => "",
                };
                let bound = r.bound.map(|b| format!(" bound {b:.6e}")).unwrap_or_default();
                println!("{:<22} {:.6e}{bound} {verdict}", r.check, r.measured);
            }
            println!("wrote {}", path.display());
            Ok(match a.rows.iter().find(|r| r.failed()) {
                Some(r) => Status::Fail(format!("{} (measured {}, bound {:?})", r.check, r.measured, r.bound)),
                None => Status::Pass,
            })
        }
        Command::Solve { config, n, out } => {
            let extra = n.map(|n| format!("n={n}")).unwrap_or_default();
            let s = session(&config, &globals, extra)?;
            let solved = commands::solve_and_dump(&s, n, out)?;
            let r = solved.summary();
            println!(
                "n = {}, energy {:.12e}, residual {:.3e} (tol {:.3e}), {} newton + {} gradient steps",
                r.n, r.energy, r.residual, r.tolerance, r.newton_iterations, r.gd_iterations
            );
            for f in &solved.files {
                println!("wrote {}", f.display());
            }
            Ok(if r.converged { Status::Pass } else { Status::Fail("solver non-converged".into()) })
        }
        Command::Gauge { config, k } => {
            let extra = k.as_ref().map(|k| format!("k={k:?}")).unwrap_or_default();
            let s = session(&config, &globals, extra)?;
            let levels = k.unwrap_or_else(|| s.config.gauge.levels.clone());
            let h = quc_core::qc_analysis::estimate_h(&s.integrand, &s.plan()).h_est;
            let (table, bounds) = commands::gauge_tables(&s, &levels, h)?;
            let p1 = s.sink.write("gauge", &table)?;
            let p2 = s.sink.write("gauge_bounds", &bounds)?;
            for b in &bounds {
                println!(
                    "k = {}: sup/inf {:.6}, lipschitz {:.6} (bound {:.6}), level gap {:.6e}",
                    b.k, b.sup_inf_ratio, b.lipschitz, b.lipschitz_bound, b.gap_measured
                );
            }
            println!("wrote {}\nwrote {}", p1.display(), p2.display());
            Ok(Status::Pass)
        }
        Command::Verify(v) => verify(v, &globals),
        Command::Degiorgi { x0, c, b, r, n_dim, out } => {
            let o = degiorgi_iterate(x0, c, b, r, n_dim)?;
            let prov = Provenance::new(
                &format!("degiorgi x0={x0} c={c} b={b} r={r} n_dim={n_dim}"),
                format!("seed={}", globals.seed.unwrap_or(0)),
            );
            let rows = commands::degiorgi_rows(&o);
            let dir = globals.out_dir.unwrap_or_else(|| PathBuf::from("."));
            let path = out.unwrap_or_else(|| dir.join("degiorgi.csv"));
            write_csv(&path, &prov, &rows)?;
            println!(
                "threshold {:e}, X0 {} threshold, {} after {} steps",
                o.threshold,
                if o.below_threshold { "below" } else { "above" },
                o.verdict.as_str(),
                o.sequence.len() - 1
            );
            println!("wrote {}", path.display());
            Ok(if o.below_threshold && o.verdict != Verdict::Vanishes {
                Status::Fail(format!("iterates {} below the threshold", o.verdict.as_str()))
            } else {
                Status::Pass
            })
        }
        Command::Run { config } => {
            let s = session(&config, &globals, String::new())?;
            let out = commands::run(&s)?;
            for l in &out.lines {
                println!("{l}");
            }
            Ok(match out.failure {
                Some(f) => Status::Fail(f),
                None => Status::Pass,
            })
        }
    }
}

fn verify(v: VerifyArgs, globals: &Globals) -> anyhow::Result<Status> {
    let extra = format!(
        "check={} k={} ell={:?} rho={} R={} center={:?} n={:?}",
        v.check, v.k, v.ell, v.rho, v.big_r, v.center, v.n
    );
    if v.ell.len() != 2 || v.center.as_ref().is_some_and(|c| c.len() != 2) {
        bail!("--ell and --center take two comma-separated numbers");
    }
    let s = session(&v.config, globals, extra)?;
    let center = match &v.center {
        Some(c) => [c[0], c[1]],
        None => {
            let d = &s.config.problem.as_ref().ok_or_else(|| anyhow!("config has no [problem] section"))?.domain;
            [(d.x0 + d.x1) / 2.0, (d.y0 + d.y1) / 2.0]
        }
    };
    let check = match v.check.as_str() {
        "caccioppoli" => CheckSpec::Caccioppoli {
            k: v.k,
            ell: [v.ell[0], v.ell[1]],
            rho: v.rho,
            radius: v.big_r,
            center,
            max_ratio: quc_core::estimates::CACCIOPPOLI_SLACK,
        },
        "caccioppoli-l1" | "caccioppoli_l1" => CheckSpec::CaccioppoliL1 { radius: v.big_r, center },
        "sobolev" => CheckSpec::Sobolev { radius: v.big_r, center },
        "lipschitz" => CheckSpec::Lipschitz { radius: v.big_r, center, expect: None, tol: 1e-8 },
        "degiorgi" => s
            .config
            .checks
            .iter()
            .find(|c| matches!(c, CheckSpec::Degiorgi { .. }))
            .cloned()
            .ok_or_else(|| anyhow!("--check degiorgi needs a degiorgi entry in [[checks]]"))?,
        other => bail!("unknown check {other:?}; expected caccioppoli, caccioppoli-l1, sobolev, lipschitz or degiorgi"),
    };
    let out = if check.needs_solution() {
        let analysis = commands::analyze(&s)?;
        let solved = commands::solve_and_dump(&s, v.n, None)?;
        if !solved.solution.converged {
            return Ok(Status::Fail("solver non-converged".into()));
        }
        let inputs =
            CheckInputs { solved: Some(&solved), h_est: analysis.h_est, normalised: Some(&analysis.normalised) };
        commands::run_check(&check, &inputs)?
    } else {
        commands::run_check(&check, &CheckInputs { solved: None, h_est: f64::NAN, normalised: None })?
    };
    let path = match v.out {
        Some(p) => {
            write_rows(&p, &s.sink.provenance, &out.rows)?;
            p
        }
        None => commands::write_check(&s.sink, &format!("verify_{}", v.check.replace('-', "_")), &out.rows)?,
    };
    println!("{}: {}", out.name, out.summary);
    println!("wrote {}", path.display());
    Ok(match out.failure {
        Some(f) => Status::Fail(f),
        None => Status::Pass,
    })
}

fn write_rows(path: &Path, prov: &Provenance, rows: &commands::CheckRows) -> anyhow::Result<()> {
    use commands::CheckRows::*;
    match rows {
        Reports(r) => write_csv(path, prov, r),
        Oracle(r) => write_csv(path, prov, std::slice::from_ref(r)),
        DeGiorgi(r) => write_csv(path, prov, r),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail(msg)) => {
            eprintln!("FAILED: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
