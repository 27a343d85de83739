//! Acceptance criteria 1 to 10. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any of them fails.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use lure_core::analyzer::{analyze, AnalyzerOptions, CheckName, Verdict};
use lure_core::catalog::{build_example, simulate_branch, verify_example, VerifyOptions, NAMES};
use lure_core::config::load_config;
use lure_core::derivative::sample_clarke_jacobian;
use lure_core::integrator::{refine_escape_time, simulate, Method, SimOptions, Termination, TrajectoryRecord};
use lure_core::linalg::{self, Mat};
use lure_core::output::{brute_force_fibre_oracle, enumerate_fibre_exact, FibreSet};
use lure_core::sampling::{rng, uniform_box};
use lure_core::LureSystem;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() < limit
}

fn lure() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lure"));
    c.env_remove("LURE_OUTPUT_DIR");
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn ex3b_state(t: f64) -> [f64; 2] {
    [t.exp() / 2.0, (t.exp() - 1.0) / 2.0]
}

fn sup_error(rec: &TrajectoryRecord<f64>, span: [f64; 2], exact: impl Fn(f64) -> Vec<f64>) -> f64 {
    rec.times
        .iter()
        .zip(&rec.x)
        .filter(|(t, _)| **t >= span[0] && **t <= span[1])
        .map(|(&t, x)| linalg::dist(x, &exact(t)))
        .fold(0.0, f64::max)
}

fn criterion_1() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut notes = Vec::new();
    let mut ok = true;
    for (a, want) in [(1.5, 3), (-2.0, 3), (10.0, 3), (-1.0, 0), (-0.5, 0), (0.0, 0), (0.5, 0), (1.0, 0)] {
        let start = Instant::now();
        let out = lure()
            .current_dir(dir.path())
            .args(["simulate", "--system", "ex3a", "--x0", &format!("{a},0"), "--out", "run.csv"])
            .output()
            .expect("run lure");
        let elapsed = start.elapsed();
        let code = out.status.code().unwrap_or(-1);
        let summary: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join("run.json")).unwrap_or_default()).unwrap_or_default();
        let started = summary["started"].as_bool();
        let good = code == want && started == Some(want == 0) && within(elapsed, 1.0);
        ok &= good;
        notes.push(format!("a={a}: exit {code} ({:.2}s)", elapsed.as_secs_f64()));
    }
    outcome(ok, notes.join(", "))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let e = build_example("ex3b").expect("ex3b");
    let sim = SimOptions {
        method: Method::Rk4Fixed,
        dt: 1e-4,
        tmax: 1.0,
        ..SimOptions::default()
    };
    let rec = simulate(&e.system, 0.0, &e.x0, &sim).expect("simulate");
    let (t_est, kind_ok) = match rec.termination {
        Termination::NoOutputSolution { bracket, .. } => (0.5 * (bracket[0] + bracket[1]), true),
        _ => (f64::NAN, false),
    };
    let esc = (t_est - 2f64.ln()).abs();
    let err = sup_error(&rec, [0.0, f64::INFINITY], |t| ex3b_state(t).to_vec());
    let xn = linalg::norm(rec.x.last().expect("samples"));
    let integral = rec.final_y_integral() + rec.final_u_integral();
    let elapsed = start.elapsed();
    outcome(
        kind_ok && esc < 1e-3 && err < 1e-6 && xn < 2.0 && integral < 10.0 && within(elapsed, 5.0),
        format!(
            "escape {t_est:.6} (|err| {esc:.1e}), sup x error {err:.1e}, final |x| {xn:.4}, integrals {integral:.4}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let e = build_example("ex3c").expect("ex3c");
    let r = e.reference.as_ref().expect("reference");
    let exact: [fn(f64) -> f64; 2] = [|_| 0.25, |t| if t <= 2f64.ln() { (f64::exp(-t) - 0.5).powi(2) } else { 0.0 }];
    let mut recs = Vec::new();
    let mut errors = Vec::new();
    for (branch, sol) in r.branches.iter().zip(exact) {
        let rec = simulate_branch(&e, branch).expect("simulate");
        // match each run against the closed form it approaches at t = 2
        errors.push(sup_error(&rec, [0.0, 2.0], |t| vec![sol(t)]));
        recs.push(rec);
    }
    let n = recs[0].len().min(recs[1].len());
    let gap = (0..n)
        .filter(|&k| recs[0].times[k] <= 1.0)
        .map(|k| linalg::dist(&recs[0].x[k], &recs[1].x[k]))
        .fold(0.0, f64::max);
    let reaches = recs.iter().all(|r| r.last_time().is_some_and(|t| t >= 2.0 - 1e-9));
    let elapsed = start.elapsed();
    outcome(
        errors.iter().all(|&e| e < 1e-4) && gap > 0.1 && reaches && within(elapsed, 5.0),
        format!(
            "x1 error {:.1e}, x2 error {:.1e}, separation {gap:.4}, {:.2}s",
            errors[0],
            errors[1],
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let e = build_example("ex3d").expect("ex3d");
    let sim = SimOptions {
        method: Method::Rk45Adaptive,
        tmax: 2.0,
        ..SimOptions::default()
    };
    let rec = simulate(&e.system, 0.0, &e.x0, &sim).expect("simulate");
    let blow_up = matches!(rec.termination, Termination::BlowUp { .. });
    let t_est = refine_escape_time(&rec, &e.system, &sim).map(|x| x.t).unwrap_or(f64::NAN);
    let esc = (t_est - std::f64::consts::FRAC_PI_2).abs();
    let integral = rec.final_y_integral();
    let elapsed = start.elapsed();
    outcome(
        blow_up && esc < 1e-2 && integral > 1e3 && within(elapsed, 10.0),
        format!(
            "termination {:?}, escape {t_est:.6} (|err| {esc:.1e}), integral of |y| {integral:.3}, {:.2}s",
            rec.termination.kind(),
            elapsed.as_secs_f64()
        ),
    )
}

const ORACLE_RADIUS: f64 = 20.0;
const SCAN: f64 = 1e-3;

fn clipped(f: &FibreSet<f64>) -> (Vec<f64>, Vec<(f64, f64)>) {
    let lim = ORACLE_RADIUS - 10.0 * SCAN;
    let mut pts: Vec<f64> = f.points.iter().map(|p| p[0]).filter(|x| x.abs() < lim).collect();
    pts.sort_by(f64::total_cmp);
    let mut segs: Vec<(f64, f64)> = f
        .segments
        .iter()
        .map(|s| s.bounds_1d())
        .filter(|&(a, b)| b > -lim && a < lim)
        .map(|(a, b)| (a.max(-ORACLE_RADIUS), b.min(ORACLE_RADIUS)))
        .collect();
    segs.sort_by(|a, b| a.0.total_cmp(&b.0));
    (pts, segs)
}

fn fibres_agree(exact: &FibreSet<f64>, oracle: &FibreSet<f64>) -> Result<(), String> {
    let (pe, se) = clipped(exact);
    let (po, so) = clipped(oracle);
    if pe.len() != po.len() || se.len() != so.len() {
        return Err(format!("exact {pe:?} {se:?} vs oracle {po:?} {so:?}"));
    }
    if let Some((a, b)) = pe.iter().zip(&po).find(|(a, b)| (*a - *b).abs() > 1e-8) {
        return Err(format!("point {a} vs {b}"));
    }
    if let Some((a, b)) = se
        .iter()
        .zip(&so)
        .find(|(a, b)| (a.0 - b.0).abs() > SCAN || (a.1 - b.1).abs() > SCAN)
    {
        return Err(format!("segment {a:?} vs {b:?}"));
    }
    Ok(())
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut r = rng(5);
    let mut compared = 0;
    let mut failures = Vec::new();
    for name in NAMES.iter().copied().chain(["ex3a:a=-2", "sec42a:d=0.7"]) {
        let e = build_example(name).expect("entry");
        let d = e.system.matrices.d();
        let f = &e.system.nonlinearity;
        if f.p() != 1 {
            continue;
        }
        for k in 0..200 {
            let tw = uniform_box(&mut r, &[0.0, -3.0, -4.0], &[5.0, 3.0, 4.0]);
            let t = tw[0];
            // half plain targets, half images of random points
            let w = if k % 2 == 0 {
                tw[1]
            } else {
                tw[2] - d[(0, 0)] * f.eval(t, &[tw[2]])[0]
            };
            let exact = enumerate_fibre_exact(d, f, t, &[w]).expect("exact fibre");
            let oracle = brute_force_fibre_oracle(d, f, t, &[w], ORACLE_RADIUS, SCAN).expect("oracle");
            compared += 1;
            if let Err(msg) = fibres_agree(&exact, &oracle) {
                failures.push(format!("{name} t={t:.4} w={w:.6}: {msg}"));
            }
        }
    }
    // levels where fibres are segments, rays or double points
    for (name, w) in [("ex3a", 1.0), ("ex3a", -1.0), ("sec42a", 0.3), ("sec42a", -0.3), ("sec42a:d=0.7", 0.7), ("ex3c", 0.25)] {
        let e = build_example(name).expect("entry");
        let (d, f) = (e.system.matrices.d(), &e.system.nonlinearity);
        let exact = enumerate_fibre_exact(d, f, 0.0, &[w]).expect("exact fibre");
        let oracle = brute_force_fibre_oracle(d, f, 0.0, &[w], ORACLE_RADIUS, SCAN).expect("oracle");
        compared += 1;
        if exact.is_empty() {
            failures.push(format!("{name} w={w}: empty exact fibre"));
        } else if let Err(msg) = fibres_agree(&exact, &oracle) {
            failures.push(format!("{name} w={w}: {msg}"));
        }
    }
    let elapsed = start.elapsed();
    let first = failures.first().cloned().unwrap_or_default();
    outcome(
        failures.is_empty() && compared >= 1000 && within(elapsed, 30.0),
        format!(
            "{compared} fibres, {} mismatches, {:.2}s {first}",
            failures.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn growth_ratio(sys: &LureSystem, t: f64, xi: &[f64]) -> f64 {
    let d = sys.matrices.d();
    d.op_norm() * linalg::norm(&sys.nonlinearity.eval(t, xi)) / linalg::norm(xi)
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;
    for name in NAMES.iter().copied().chain(["ex4c:h=1"]) {
        let report = verify_example(name, &VerifyOptions::default()).expect("verify");
        let bad: Vec<String> = report
            .items
            .iter()
            .filter(|i| i.name.starts_with("verdict") || i.name.starts_with("witness"))
            .filter(|i| !i.passed)
            .map(|i| format!("{name} {}: {}", i.name, i.detail))
            .collect();
        ok &= bad.is_empty();
        notes.extend(bad);
    }
    let opts = AnalyzerOptions::default();

    let h_half = analyze(&build_example("ex4c").expect("ex4c").system, &opts).expect("analyze");
    let v = h_half.verdicts();
    let half_ok = [CheckName::Determinant, CheckName::Growth, CheckName::Monotonicity, CheckName::LipschitzUpper]
        .iter()
        .all(|c| v[c] == Verdict::PassSampled);
    ok &= half_ok;
    notes.push(format!("ex4c(h=1/2) det/growth/uniqueness pass: {half_ok}"));

    let h_one = analyze(&build_example("ex4c:h=1").expect("ex4c").system, &opts).expect("analyze");
    let det = h_one.check(CheckName::Determinant).expect("det");
    let at_zero = det.verdict == Verdict::FailWitness
        && det.witness.as_ref().is_some_and(|w| linalg::norm(&w.xi) <= 1e-6);
    ok &= at_zero;
    notes.push(format!("ex4c(h=1) determinant witness at 0: {at_zero}"));

    let ex4a = build_example("ex4a").expect("ex4a");
    let rep = analyze(&ex4a.system, &opts).expect("analyze");
    let g = rep.check(CheckName::Growth).expect("growth");
    let at_quarter_turn = g.verdict == Verdict::FailWitness
        && g.witness.as_ref().is_some_and(|w| growth_ratio(&ex4a.system, std::f64::consts::FRAC_PI_2, &w.xi) >= 1.0);
    ok &= at_quarter_turn;
    notes.push(format!("ex4a growth fails at theta = pi/2: {at_quarter_turn}"));

    let ex3c = analyze(&build_example("ex3c").expect("ex3c").system, &opts).expect("analyze");
    let lower = ex3c.check(CheckName::LowerLipschitz).expect("lower");
    let pair = lower.witness.as_ref().and_then(|w| {
        let z = w.zeta.as_ref()?;
        let (a, b) = (w.xi[0].min(z[0]), w.xi[0].max(z[0]));
        Some((a + 0.5).abs() < 1e-9 && (b - 0.5).abs() < 1e-9)
    });
    let pair_ok = lower.verdict == Verdict::FailWitness && pair == Some(true);
    ok &= pair_ok;
    notes.push(format!("ex3c lower-Lipschitz witness (-1/2, 1/2): {pair_ok}"));

    let elapsed = start.elapsed();
    ok &= within(elapsed, 60.0);
    notes.push(format!("{:.2}s", elapsed.as_secs_f64()));
    outcome(ok, notes.join("; "))
}

fn criterion_7() -> Outcome {
    let e = build_example("ex4a").expect("ex4a");
    let m = &e.system.matrices;
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let s = uniform_box(&mut r, &[0.0, -3.0, -3.0], &[10.0, 3.0, 3.0]);
        let (t, xi) = (s[0], &s[1..]);
        let fx = e.system.nonlinearity.eval(t, xi);
        let big_f = linalg::sub(xi, &m.d().mul_vec(&fx));
        let rn = linalg::norm(xi);
        // g(s) = s
        worst = worst.max((linalg::norm(&big_f) - rn * rn).abs());
    }
    outcome(worst <= 1e-10, format!("max | |F_t(xi)| - g(|xi|) |xi| | = {worst:.2e} over 10^4 samples"))
}

fn criterion_8() -> Outcome {
    let g = build_example("sec42a").expect("sec42a").system.nonlinearity;
    let l = Mat::from_f64_rows(&[vec![1.5], vec![-2.0], vec![0.25]]).expect("L");
    let lg = g.compose_left(l.clone()).expect("compose");
    let mut r = rng(8);
    let radius = 0.1;
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let s = uniform_box(&mut r, &[0.0, -2.0], &[5.0, 2.0]);
        let jg = sample_clarke_jacobian(&g, s[0], &s[1..], radius, 8, k).expect("samples");
        let jlg = sample_clarke_jacobian(&lg, s[0], &s[1..], radius, 8, k).expect("samples");
        for (a, b) in jg.matrices.iter().zip(&jlg.matrices) {
            worst = worst.max(l.mul(a).max_abs_diff(b));
        }
    }
    outcome(worst <= 1e-12, format!("max entry |L dg - d(Lg)| = {worst:.2e} at 100 points, 8 samples each"))
}

fn rk4_final_error(sys: &LureSystem, x0: &[f64], tmax: f64, dt: f64, exact: &dyn Fn(f64) -> Vec<f64>) -> f64 {
    let sim = SimOptions {
        method: Method::Rk4Fixed,
        dt,
        tmax,
        ..SimOptions::default()
    };
    let rec = simulate(sys, 0.0, x0, &sim).expect("simulate");
    let t = rec.last_time().expect("samples");
    linalg::dist(rec.x.last().expect("samples"), &exact(t))
}

fn criterion_9() -> Outcome {
    let ex3b = build_example("ex3b").expect("ex3b");
    let linear = load_config(&config("linear.toml")).expect("linear config");
    let lin_sys = linear.system().expect("system");
    let lin_exact = |t: f64| vec![(1.0 + (-2.0 * t).exp()) / 2.0, (1.0 - (-2.0 * t).exp()) / 2.0];
    let cases: [(&str, &LureSystem, Vec<f64>, f64, &dyn Fn(f64) -> Vec<f64>); 2] = [
        ("ex3b", &ex3b.system, ex3b.x0.clone(), 0.5, &|t| ex3b_state(t).to_vec()),
        ("f=0", &lin_sys, linear.x0().expect("x0"), 2.0, &lin_exact),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, sys, x0, tmax, exact) in cases {
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&dt| rk4_final_error(sys, &x0, tmax, dt, exact))
            .collect();
        let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
        ok &= ratios.iter().all(|r| (8.0..=32.0).contains(r));
        notes.push(format!("{name}: ratios {:.2}, {:.2}", ratios[0], ratios[1]));
    }
    outcome(ok, notes.join("; "))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    lure().current_dir(dir).args(args).output().expect("run lure")
}

fn criterion_10() -> Outcome {
    let ex3d_expr = config("ex3d_expression.toml");
    let linear = config("linear.toml");
    let (ex3d_expr, linear) = (ex3d_expr.to_str().expect("path"), linear.to_str().expect("path"));
    let commands: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (vec!["simulate", "--system", "ex3d", "--out", "a.csv"], vec!["a.csv", "a.json"]),
        (vec!["simulate", "--system", linear, "--out", "b.csv"], vec!["b.csv", "b.json"]),
        (
            vec![
                "simulate", "--system", "ex3c", "--dt", "1e-3", "--out", "c.csv", "--inclusion", "--policy",
                "fixed_branch(0)", "--continuation", "nearest_previous",
            ],
            vec!["c.csv", "c.json"],
        ),
        (vec!["analyze", "--system", "ex4b", "--twindow", "0:5", "--seed", "11", "--out", "d.json"], vec!["d.json"]),
        (vec!["fibre", "--system", ex3d_expr, "--t", "0.5", "--w", "0.75", "--seed", "3"], vec![]),
        (vec!["fibre", "--system", "ex3c", "--t", "0", "--w", "0.25"], vec![]),
        (vec!["example", "sec42b"], vec![]),
        (vec!["example", "--list"], vec![]),
        (vec!["example", "ex3c", "--verify"], vec![]),
    ];
    let dir = tempfile::tempdir().expect("tempdir");
    let mut differing = Vec::new();
    for (args, files) in &commands {
        let first = run_in(dir.path(), args);
        let first_files: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(dir.path().join(f)).unwrap_or_default()).collect();
        let second = run_in(dir.path(), args);
        let second_files: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(dir.path().join(f)).unwrap_or_default()).collect();
        let same = first.stdout == second.stdout
            && first.status.code() == second.status.code()
            && first_files == second_files
            && first_files.iter().all(|b| !b.is_empty())
            && first.status.success();
        if !same {
            differing.push(format!("{} {}", args[0], args[2]));
        }
    }
    outcome(
        differing.is_empty(),
        format!("{} commands run twice, differing or failing: {:?}", commands.len(), differing),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("ex3a non-existence at t0", criterion_1),
        ("ex3b bounded escape at ln 2", criterion_2),
        ("ex3c two solutions", criterion_3),
        ("ex3d blow-up at pi/2", criterion_4),
        ("exact fibres match the oracle", criterion_5),
        ("analyzer verdict matrix", criterion_6),
        ("ex4a norm identity", criterion_7),
        ("Clarke composition with L", criterion_8),
        ("rk4 convergence order", criterion_9),
        ("CLI determinism", criterion_10),
    ];
    let mut failed = 0;
    for (k, (title, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} [{}] {title}: {}",
            k + 1,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
