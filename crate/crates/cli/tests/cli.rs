use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use quc_core::estimates::{read_reports, VerificationReport};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn quc(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quc"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn quc")
}

fn text(o: &Output) -> (String, String) {
    (String::from_utf8_lossy(&o.stdout).into_owned(), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("case.toml");
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn affine_smoke_passes_with_unit_lipschitz_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("affine_smoke.toml");
    let o = quc(&["run", cfg.to_str().unwrap()], dir.path());
    let (out, err) = text(&o);
    assert!(o.status.success(), "{out}\n{err}");
    let f = std::fs::File::open(dir.path().join("affine_smoke_1_lipschitz.csv")).unwrap();
    let rows: Vec<VerificationReport> = read_reports(f).unwrap();
    assert!((rows[0].ratio - 1.0).abs() <= 1e-8, "ratio {}", rows[0].ratio);
    assert!(dir.path().join("affine_smoke_solution.csv").exists());
    assert!(dir.path().join("affine_smoke_analyze.csv").exists());
}

#[test]
fn harmonic_oracle_run_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("harmonic.toml");
    let o = quc(&["run", cfg.to_str().unwrap()], dir.path());
    let (out, err) = text(&o);
    assert!(o.status.success(), "{out}\n{err}");
    assert!(out.lines().any(|l| l.starts_with("oracle[0]") && l.ends_with("PASS")), "{out}");
}

#[test]
fn tiny_iteration_cap_fails_naming_the_solver() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("tiny_cap.toml");
    let o = quc(&["run", cfg.to_str().unwrap()], dir.path());
    let (_, err) = text(&o);
    assert_eq!(o.status.code(), Some(1));
    assert!(err.contains("solver non-converged"), "{err}");
}

#[test]
fn small_exponent_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[integrand]\nkind = \"power\"\np = 0.5\n");
    let o = quc(&["validate", cfg.to_str().unwrap()], dir.path());
    let (_, err) = text(&o);
    assert_eq!(o.status.code(), Some(2));
    assert!(err.contains("exponent must exceed 1"), "{err}");
}

#[test]
fn unknown_key_is_rejected_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[integrand]\nkind = \"power\"\np = 3.0\n\n[problem]\nn = 33\nboundary = \"x\"\nmesh_style = \"fine\"\n",
    );
    let o = quc(&["validate", cfg.to_str().unwrap()], dir.path());
    let (_, err) = text(&o);
    assert_eq!(o.status.code(), Some(2));
    assert!(err.contains("mesh_style") && err.contains("problem"), "{err}");
}

#[test]
fn every_csv_starts_with_provenance_then_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("harmonic.toml");
    assert!(quc(&["run", cfg.to_str().unwrap()], dir.path()).status.success());
    let mut n = 0;
    for e in std::fs::read_dir(dir.path()).unwrap() {
        let p = e.unwrap().path();
        let body = std::fs::read_to_string(&p).unwrap();
        let mut lines = body.lines();
        let first = lines.next().unwrap();
        assert!(first.starts_with("# quc ") && first.contains("config_sha256="), "{}: {first}", p.display());
        let header = lines.next().unwrap();
        assert!(header.chars().next().unwrap().is_ascii_alphabetic(), "{}: {header}", p.display());
        n += 1;
    }
    assert!(n >= 8);
}

#[test]
fn degiorgi_subcommand_reports_both_regimes() {
    let dir = tempfile::tempdir().unwrap();
    let below = quc(&["degiorgi", "--x0", "0.2", "--b", "4"], dir.path());
    assert!(below.status.success());
    assert!(text(&below).0.contains("vanishes"));
    let above = quc(&["degiorgi", "--x0", "2.5", "--b", "4"], dir.path());
    assert!(above.status.success());
    assert!(text(&above).0.contains("diverges"));
}

#[test]
fn analyze_gauge_and_verify_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("blend.toml");
    let cfg = cfg.to_str().unwrap();
    assert!(quc(&["analyze", cfg], dir.path()).status.success());
    assert!(quc(&["gauge", cfg, "--k", "0.5,1"], dir.path()).status.success());
    let v = quc(&["verify", cfg, "--check", "caccioppoli", "--k", "0.1", "--ell", "0.5,-0.25"], dir.path());
    assert!(v.status.success(), "{}", text(&v).1);
    for f in ["blend_analyze.csv", "blend_gauge.csv", "blend_gauge_bounds.csv", "blend_verify_caccioppoli.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}
