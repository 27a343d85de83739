use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lure_core::catalog::build_example;
use lure_core::config::{load_config, parse_config};
use lure_core::Error;

fn lure(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lure"))
        .current_dir(dir)
        .env_remove("LURE_OUTPUT_DIR")
        .args(args)
        .output()
        .expect("run lure")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn config_str(name: &str) -> String {
    config(name).to_str().unwrap().to_string()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn example_verify_reports_escape_at_ln2() {
    let dir = tempfile::tempdir().unwrap();
    let out = lure(dir.path(), &["example", "ex3b", "--verify"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("estimate 0.6931"), "{text}");
    assert!(text.contains("overall: pass"));
}

#[test]
fn example_list_names_every_entry() {
    let dir = tempfile::tempdir().unwrap();
    let out = lure(dir.path(), &["example", "--list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 10);
    for name in lure_core::catalog::NAMES {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

#[test]
fn exported_example_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = lure(dir.path(), &["example", "ex4c:h=1"]);
    assert!(out.status.success());
    let cfg = parse_config(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(cfg.system().unwrap(), build_example("ex4c:h=1").unwrap().system);
}

#[test]
fn linear_simulation_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = lure(dir.path(), &["simulate", "--system", &config_str("linear.toml"), "--out", "lin.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("lin.csv"));
    assert_eq!(header, ["t", "x_1", "x_2", "y_1", "u_1", "residual"]);
    assert_eq!(rows.len(), 2001);
    for r in &rows {
        let e = (-2.0 * r[0]).exp();
        assert!((r[1] - (1.0 + e) / 2.0).abs() < 1e-6);
        assert!((r[2] - (1.0 - e) / 2.0).abs() < 1e-6);
        assert!((r[3] - r[1]).abs() < 1e-12);
        assert_eq!(r[4], 0.0);
    }
    let s = json(&dir.path().join("lin.json"));
    assert_eq!(s["summary"]["termination"]["kind"], "reached_tmax");
    assert_eq!(s["csv"], "lin.csv");
}

#[test]
fn csv_uses_seventeen_digits_and_lf() {
    let dir = tempfile::tempdir().unwrap();
    lure(dir.path(), &["simulate", "--system", "sec42a", "--tmax", "0.01", "--out", "s.csv"]);
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    let second = text.lines().nth(1).unwrap();
    for field in second.split(',') {
        let mantissa = field.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.replace('.', "").len(), 17, "{field}");
    }
}

#[test]
fn fibre_of_deadzone_config_is_an_interval() {
    let dir = tempfile::tempdir().unwrap();
    let out = lure(dir.path(), &["fibre", "--system", &config_str("sec42a.toml"), "--t", "0", "--w", "0.3"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["intervals"], serde_json::json!([[0.3, 1.3]]));
    assert_eq!(v["exact"], true);
}

#[test]
fn fibre_of_expression_config_uses_multistart() {
    let dir = tempfile::tempdir().unwrap();
    let out = lure(dir.path(), &["fibre", "--system", &config_str("ex3d_expression.toml"), "--t", "0", "--w", "1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["exact"], false);
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 1);
    assert!((pts[0][0].as_f64().unwrap() - 1f64.tan()).abs() < 1e-8);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(lure(p, &["simulate", "--system", "ex3a", "--out", "a.csv"]).status.code(), Some(3));
    // mid-run loss of existence and blow-up are results
    assert_eq!(lure(p, &["simulate", "--system", "ex3b", "--out", "b.csv"]).status.code(), Some(0));
    assert_eq!(json(&p.join("b.json"))["summary"]["termination"]["kind"], "no_output_solution");
    assert_eq!(lure(p, &["simulate", "--system", "ex3d", "--out", "d.csv"]).status.code(), Some(0));
    let d = json(&p.join("d.json"));
    assert_eq!(d["summary"]["termination"]["kind"], "blow_up");
    assert!((d["escape_time"]["t"].as_f64().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-4);

    for args in [
        &["simulate", "--system", "missing.toml", "--out", "x.csv"][..],
        &["simulate", "--system", "ex3b", "--x0", "1,2,3", "--out", "x.csv"],
        &["simulate", "--system", "ex3b", "--dt", "-1", "--out", "x.csv"],
        &["simulate", "--system", "ex3b", "--out", "x.json"],
        &["simulate", "--system", "ex4c:h=2", "--out", "x.csv"],
        &["analyze", "--system", "ex3b", "--twindow", "1"],
        &["fibre", "--system", "ex3b", "--t", "0", "--w", "1,2"],
        &["example", "nope"],
        &["simulate", "--system", "ex3b"],
    ] {
        assert_eq!(lure(p, args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn bad_config_reports_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("linear.toml")).unwrap().replace("C = [[1.0, 0.0]]", "C = [[1.0]]");
    std::fs::write(dir.path().join("bad.toml"), text).unwrap();
    let out = lure(dir.path(), &["simulate", "--system", "bad.toml", "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension mismatch in C"));
}

#[test]
fn inclusion_run_records_branches() {
    let dir = tempfile::tempdir().unwrap();
    let out = lure(
        dir.path(),
        &[
            "simulate", "--system", "ex3c", "--dt", "1e-3", "--out", "c.csv", "--inclusion", "--policy",
            "fixed_branch(1)",
        ],
    );
    assert!(out.status.success());
    let (header, rows) = read_csv(&dir.path().join("c.csv"));
    assert_eq!(header.last().unwrap(), "branch");
    for r in &rows {
        assert!((r[1] - 0.25).abs() < 1e-8);
        assert!((r[2] - 0.5).abs() < 1e-8);
    }
    let s = json(&dir.path().join("c.json"));
    assert_eq!(s["inclusion"]["policy"]["kind"], "fixed_branch");
}

#[test]
fn analyze_writes_report_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = lure(
        dir.path(),
        &["analyze", "--system", "ex4b", "--twindow", "0:2", "--seed", "4", "--out", "r.json"],
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("determinant"));
    let r = json(&dir.path().join("r.json"));
    assert_eq!(r["seed"], 4);
    assert_eq!(r["t_window"], serde_json::json!([0.0, 2.0]));
    assert_eq!(r["report"]["checks"].as_array().unwrap().len(), 9);
}

#[test]
fn output_directory_override() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("results");
    std::fs::create_dir(&target).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lure"))
        .current_dir(dir.path())
        .env("LURE_OUTPUT_DIR", &target)
        .args(["simulate", "--system", "sec42b", "--tmax", "0.1", "--out", "run.csv"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(target.join("run.csv").is_file());
    assert!(target.join("run.json").is_file());
    assert!(!dir.path().join("run.csv").exists());
}

#[test]
fn shipped_ex3d_config_equals_catalog_entry() {
    let cfg = load_config(&config("ex3d.toml")).unwrap();
    let e = build_example("ex3d").unwrap();
    assert_eq!(cfg.system().unwrap(), e.system);
    assert_eq!(cfg.x0().unwrap(), e.x0);
    assert_eq!(cfg.defaults.method, e.method);
    for name in ["sec42a", "ex3c", "ex4a"] {
        let cfg = load_config(&config(&format!("{name}.toml"))).unwrap();
        assert_eq!(cfg.system().unwrap(), build_example(name).unwrap().system, "{name}");
    }
}

#[test]
fn expression_config_evaluates_x_minus_atan() {
    let sys = load_config(&config("ex3d_expression.toml")).unwrap().system().unwrap();
    let reference = build_example("ex3d").unwrap().system;
    assert_eq!(sys.matrices, reference.matrices);
    for k in 0..200 {
        let xi = -10.0 + 0.1 * k as f64;
        let v = sys.nonlinearity.eval(0.3, &[xi])[0];
        assert!((v - (xi - xi.atan())).abs() < 1e-12, "{xi}");
    }
}

#[test]
fn config_errors_are_typed() {
    let text = std::fs::read_to_string(config("linear.toml")).unwrap();
    assert!(matches!(parse_config(&text.replace("dt = 1e-3", "dt = 1e-3\nspeed = 2")), Err(Error::Parse(_))));
    assert!(matches!(
        parse_config(&text.replace("name = \"zero\"", "name = \"nothing\"")),
        Err(Error::Parse(_))
    ));
}
