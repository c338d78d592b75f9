use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rank1_thermo_cli::{diff_runs, Manifest, Summary};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rank1-thermo"));
    c.env_remove("RANK1_THERMO_THREADS");
    c
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn summary(out: &Path) -> Summary {
    serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn passed(s: &Summary, name: &str) -> bool {
    s.assertions.iter().find(|a| a.name == name).unwrap().passed
}

#[test]
fn riccati_validate_constant_curvature_passes() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(
        d.path(),
        "c.json",
        r#"{"experiment": "riccati-validate", "model": {"variant": "ConstantNegative", "k": 1.0}}"#,
    );
    let out = d.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let s = summary(&out);
    assert!(s.passed);
    assert!(passed(&s, "phi_u_equals_minus_k"));
    assert!(passed(&s, "chi_equals_k"));
    assert!(out.join("riccati_trace.csv").exists());
    let m = Manifest::load(&out).unwrap();
    assert_eq!(m.status, "pass");
    assert_eq!(m.experiment, "riccati-validate");
}

#[test]
fn negative_dt_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(
        d.path(),
        "c.json",
        r#"{"experiment": "riccati-validate", "params": {"dt": -0.01}}"#,
    );
    let o = run(&cfg, &d.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("dt"));
}

#[test]
fn unknown_experiment_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "c.json", r#"{"experiment": "nope"}"#);
    assert_eq!(run(&cfg, &d.path().join("out"), &[]).status.code(), Some(2));
}

#[test]
fn failed_assertion_exits_one() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(
        d.path(),
        "c.json",
        r#"{"experiment": "riccati-validate", "params": {"tolerance": 1e-20}}"#,
    );
    let out = d.path().join("out");
    assert_eq!(run(&cfg, &out, &[]).status.code(), Some(1));
    assert!(!summary(&out).passed);
    assert_eq!(Manifest::load(&out).unwrap().status, "fail");
}

#[test]
fn numeric_failure_exits_three_with_report() {
    let d = tempfile::tempdir().unwrap();
    // a single fixed point has an affine pressure and no spectrum range
    let cfg = write_config(
        d.path(),
        "c.json",
        r#"{"experiment": "spectrum-report",
            "suspension": {"sft": {"matrix": [[1]]}, "roof": [1.0], "potential": [-1.0]}}"#,
    );
    let out = d.path().join("out");
    assert_eq!(run(&cfg, &out, &[]).status.code(), Some(3));
    let err: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(err["error"], "numeric");
    assert_eq!(Manifest::load(&out).unwrap().status, "error");
}

#[test]
fn corner_demo_emits_tables() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "c.json", r#"{"experiment": "corner-demo"}"#);
    let out = d.path().join("out");
    assert_eq!(run(&cfg, &out, &[]).status.code(), Some(0));
    for f in ["pressure_curve.csv", "corner.json", "spectrum.csv", "e_alpha_table.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let s = summary(&out);
    assert!(passed(&s, "corner_detected_at_1"));
    assert!(passed(&s, "e_equals_alpha_below_alpha_1"));
    assert!((s.scalars["alpha_1"] - 0.562335).abs() < 1e-6);
}

#[test]
fn byte_identical_across_thread_counts() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(
        d.path(),
        "c.json",
        r#"{"experiment": "anosov-baseline", "seed": 11, "params": {"n_seeds": 8, "horizon": 20}}"#,
    );
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert_eq!(run(&cfg, &a, &["--threads", "1"]).status.code(), Some(0));
    let o = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&b)
        .env("RANK1_THERMO_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let (ma, mb) = (Manifest::load(&a).unwrap(), Manifest::load(&b).unwrap());
    assert_eq!(ma.threads, 1);
    assert_eq!(mb.threads, 4);
    assert_eq!(ma.artifacts, mb.artifacts);
    for art in &ma.artifacts {
        assert_eq!(
            std::fs::read(a.join(&art.file)).unwrap(),
            std::fs::read(b.join(&art.file)).unwrap()
        );
    }
}

#[test]
fn identical_runs_have_empty_diff() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "c.json", r#"{"experiment": "spectrum-report"}"#);
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    run(&cfg, &a, &[]);
    run(&cfg, &b, &[]);
    let r = diff_runs(&a, &b, 0.0).unwrap();
    assert!(r.is_empty(), "{r:?}");
    let o = bin().arg("diff").arg(&a).arg(&b).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn seed_only_changes_sampled_artifacts() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(
        d.path(),
        "c.json",
        r#"{"experiment": "anosov-baseline", "params": {"n_seeds": 4, "horizon": 20}}"#,
    );
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    run(&cfg, &a, &["--seed", "1"]);
    run(&cfg, &b, &["--seed", "2"]);
    assert_ne!(
        std::fs::read(a.join("ensemble.csv")).unwrap(),
        std::fs::read(b.join("ensemble.csv")).unwrap()
    );
    let r = diff_runs(&a, &b, 1e-12).unwrap();
    assert!(r.is_empty(), "{r:?}");
    assert!(r.skipped_sampled.contains(&"ensemble.csv".to_string()));
    assert!(!r.skipped_sampled.contains(&"closed_orbit.json".to_string()));

    // a deterministic pipeline ignores the seed entirely
    let cfg = write_config(d.path(), "s.json", r#"{"experiment": "corner-demo"}"#);
    let (a, b) = (d.path().join("c"), d.path().join("e"));
    run(&cfg, &a, &["--seed", "1"]);
    run(&cfg, &b, &["--seed", "2"]);
    let r = diff_runs(&a, &b, 0.0).unwrap();
    assert!(r.is_empty() && r.skipped_sampled.is_empty(), "{r:?}");
}

#[test]
fn halving_dt_gives_fourth_order_ratio() {
    let d = tempfile::tempdir().unwrap();
    let coarse = write_config(
        d.path(),
        "a.json",
        r#"{"experiment": "riccati-validate", "params": {"dt": 0.1}}"#,
    );
    let fine = write_config(
        d.path(),
        "b.json",
        r#"{"experiment": "riccati-validate", "params": {"dt": 0.05}}"#,
    );
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    run(&coarse, &a, &[]);
    run(&fine, &b, &[]);
    let r = diff_runs(&a, &b, 1e-12).unwrap();
    assert!(!r.entries.is_empty());
    for name in ["tanh_closed_form_error", "inverse_closed_form_error"] {
        let ratio = r.error_ratios[name];
        assert!((ratio.log2() - 4.0).abs() < 0.25, "{name}: {ratio}");
    }
}

#[test]
fn diff_without_manifest_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let o = bin().arg("diff").arg(d.path()).arg(d.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "missing-manifest");
}

#[test]
fn lists_every_experiment() {
    let o = bin().arg("list-experiments").output().unwrap();
    assert!(o.status.success());
    let s = String::from_utf8(o.stdout).unwrap();
    for name in [
        "riccati-validate",
        "anosov-baseline",
        "corner-demo",
        "lambda-ell-sweep",
        "spectrum-report",
    ] {
        assert!(s.contains(name));
    }
}

#[test]
fn lambda_ell_sweep_default_library() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(
        d.path(),
        "c.json",
        r#"{"experiment": "lambda-ell-sweep", "params": {"ells": [1, 5, 20, 50]}}"#,
    );
    let out = d.path().join("out");
    assert_eq!(run(&cfg, &out, &[]).status.code(), Some(0));
    let s = summary(&out);
    assert!(passed(&s, "lambda_ell_nested"));
    assert!(passed(&s, "flat_orbits_excluded"));
    assert_eq!(s.scalars["flat_orbits"], 2.0);
    let table = std::fs::read_to_string(out.join("lambda_ell.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn lambda_ell_sweep_rejects_other_models() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(
        d.path(),
        "c.json",
        r#"{"experiment": "lambda-ell-sweep", "model": {"variant": "ConstantNegative", "k": 1.0}}"#,
    );
    assert_eq!(run(&cfg, &d.path().join("out"), &[]).status.code(), Some(2));
}

#[test]
fn ensemble_with_no_completed_seed_fails() {
    let d = tempfile::tempdir().unwrap();
    // a short collar chart: every backward burn-in leaves it
    let cfg = write_config(
        d.path(),
        "c.json",
        r#"{"experiment": "anosov-baseline",
            "model": {"variant": "CollarProfile",
                      "warp": {"kind": "FlatBand", "radius": 1.0, "half_width": 0.5, "a": 1.0},
                      "half_length": 3.0},
            "params": {"n_seeds": 4, "horizon": 10}}"#,
    );
    let out = d.path().join("out");
    assert_eq!(run(&cfg, &out, &[]).status.code(), Some(1));
    let s = summary(&out);
    assert!(!passed(&s, "seeds_completed"));
    assert_eq!(s.scalars["failures"], 4.0);
}
