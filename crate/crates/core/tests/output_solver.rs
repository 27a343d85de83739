use lure_core::catalog::build_example;
use lure_core::output::{
    brute_force_fibre_oracle, enumerate_fibre_exact, enumerate_fibre_multistart, output_residual, solve_output,
    NoSolutionCertificate, SolveOptions, SolveStatus,
};
use lure_core::sampling::{rng, uniform_box};
use lure_core::{Error, Mat, Nonlinearity};

fn parts(name: &str) -> (Mat<f64>, Nonlinearity) {
    let e = build_example(name).unwrap();
    (e.system.matrices.d().clone(), e.system.nonlinearity)
}

/// Numeric-only options: the exact piecewise path is switched off.
fn numeric() -> SolveOptions {
    SolveOptions {
        use_exact: false,
        ..SolveOptions::default()
    }
}

#[test]
fn ex3a_has_no_output_at_one_and_a_half() {
    let (d, f) = parts("ex3a");
    let s = solve_output(&d, &f, 0.0, &[1.5], &[0.0], &SolveOptions::default()).unwrap();
    assert_eq!(s.status, SolveStatus::NoSolution);
    assert_eq!(s.certificate, Some(NoSolutionCertificate::RangeExclusion));
    assert!(s.y.is_none());

    let s = solve_output(&d, &f, 0.0, &[1.5], &[0.0], &numeric()).unwrap();
    assert!(matches!(s.status, SolveStatus::NoSolution | SolveStatus::NotConverged), "{:?}", s.status);
    assert!(matches!(s.certificate, Some(NoSolutionCertificate::Exhaustion { .. })));
}

#[test]
fn ex3b_output_is_one_at_start() {
    let (d, f) = parts("ex3b");
    for opts in [SolveOptions::default(), numeric()] {
        let s = solve_output(&d, &f, 0.0, &[0.5], &[0.0], &opts).unwrap();
        assert_eq!(s.status, SolveStatus::UniquePoint);
        let y = s.y.unwrap();
        assert!((y[0] - 1.0).abs() < 1e-12);
        assert!(output_residual(&d, &f, 0.0, &y, &[0.5]) < 1e-12);
    }
}

#[test]
fn zero_nonlinearity_returns_target() {
    let f = Nonlinearity::zero(2, 3);
    let d = Mat::from_f64_rows(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 4.0]]).unwrap();
    for guess in [[0.0, 0.0], [10.0, -7.0]] {
        let s = solve_output(&d, &f, 1.0, &[0.25, -3.0], &guess, &numeric()).unwrap();
        assert_eq!(s.status, SolveStatus::UniquePoint);
        assert_eq!(s.y.unwrap(), vec![0.25, -3.0]);
        assert!(s.iterations <= 1);
    }
    let fib = enumerate_fibre_multistart(&d, &f, 0.0, &[0.25, -3.0], &SolveOptions::default()).unwrap();
    assert_eq!(fib.points, vec![vec![0.25, -3.0]]);
    assert!(!fib.exact);
}

#[test]
fn ex3d_inverts_arctan() {
    let (d, f) = parts("ex3d");
    for opts in [SolveOptions::default(), numeric()] {
        let s = solve_output(&d, &f, 0.0, &[1.0], &[0.0], &opts).unwrap();
        assert_eq!(s.status, SolveStatus::UniquePoint);
        let y = s.y.unwrap()[0];
        assert!((y - 1f64.tan()).abs() < 1e-9);
        assert!(s.residual < 1e-10);
    }
}

#[test]
fn monotone_solution_ignores_the_guess() {
    let (d, f) = parts("ex3d");
    let mut r = rng(21);
    let want = 0.7f64.tan();
    for _ in 0..100 {
        let g = uniform_box(&mut r, &[-20.0], &[20.0]);
        let s = solve_output(&d, &f, 0.0, &[0.7], &g, &numeric()).unwrap();
        assert!((s.y.unwrap()[0] - want).abs() < 1e-10, "guess {g:?}");
    }
}

#[test]
fn exact_fibres_of_the_worked_examples() {
    let (d, f) = parts("sec42a");
    let fib = enumerate_fibre_exact(&d, &f, 0.0, &[0.3]).unwrap();
    assert!(fib.exact && fib.points.is_empty());
    assert_eq!(fib.segments.len(), 1);
    let (a, b) = fib.segments[0].bounds_1d();
    assert!((a - 0.3).abs() < 1e-15 && (b - 1.3).abs() < 1e-15);

    let (d, f) = parts("ex3c");
    let fib = enumerate_fibre_exact(&d, &f, 0.0, &[0.25]).unwrap();
    let mut pts: Vec<f64> = fib.points.iter().map(|p| p[0]).collect();
    pts.sort_by(f64::total_cmp);
    assert_eq!(pts, vec![-0.5, 0.5]);
    assert!(fib.segments.is_empty());

    let (d, f) = parts("ex3a");
    assert!(enumerate_fibre_exact(&d, &f, 0.0, &[5.0]).unwrap().is_empty());
    assert!(enumerate_fibre_exact(&d, &f, 0.0, &[-1.0001]).unwrap().is_empty());
}

#[test]
fn exact_entries_satisfy_the_equation() {
    let mut r = rng(3);
    for name in ["ex3a", "ex3b", "ex3c", "ex3d", "sec42a"] {
        let (d, f) = parts(name);
        for _ in 0..200 {
            let tw = uniform_box(&mut r, &[0.0, -2.0], &[4.0, 2.0]);
            let fib = enumerate_fibre_exact(&d, &f, tw[0], &tw[1..]).unwrap();
            for p in &fib.points {
                assert!(output_residual(&d, &f, tw[0], p, &tw[1..]) <= 1e-12, "{name} {tw:?} {p:?}");
            }
            for s in &fib.segments {
                let ends = [Some(s.start.clone()), s.end()];
                for e in ends.iter().flatten() {
                    assert!(output_residual(&d, &f, tw[0], e, &tw[1..]) <= 1e-12, "{name} {tw:?}");
                }
            }
        }
    }
}

#[test]
fn unsupported_structure_is_a_configuration_error() {
    let (d, f) = parts("ex4b");
    assert!(matches!(enumerate_fibre_exact(&d, &f, 0.0, &[0.1, 0.2]), Err(Error::Config(_))));
}

#[test]
fn multistart_finds_both_roots_of_ex3c() {
    let (d, f) = parts("ex3c");
    let opts = SolveOptions {
        n_starts: 64,
        search_radius: 3.0,
        use_exact: false,
        ..SolveOptions::default()
    };
    let fib = enumerate_fibre_multistart(&d, &f, 0.0, &[0.25], &opts).unwrap();
    let mut pts: Vec<f64> = fib.points.iter().map(|p| p[0]).collect();
    pts.sort_by(f64::total_cmp);
    assert_eq!(pts.len(), 2, "{pts:?}");
    assert!((pts[0] + 0.5).abs() < 1e-8 && (pts[1] - 0.5).abs() < 1e-8);

    // Newton converges without a fallback from a regular guess
    let s = solve_output(&d, &f, 0.0, &[0.25], &[0.4], &opts).unwrap();
    assert_eq!(s.status, SolveStatus::UniquePoint);
    assert!((s.y.unwrap()[0] - 0.5).abs() < 1e-8);
    // F'(0) = 0 forces the multistart fallback, which sees both roots
    let s = solve_output(&d, &f, 0.0, &[0.25], &[0.0], &opts).unwrap();
    assert_eq!(s.status, SolveStatus::Multiple);
    assert_eq!(s.fibre.as_ref().map(|f| f.points.len()), Some(2));
}

#[test]
fn multistart_agrees_with_newton_for_unique_fibres() {
    let (d, f) = parts("ex4c");
    let mut r = rng(9);
    for _ in 0..20 {
        let tw = uniform_box(&mut r, &[0.0, -3.0, -3.0], &[5.0, 3.0, 3.0]);
        let fib = enumerate_fibre_multistart(&d, &f, tw[0], &tw[1..], &SolveOptions::default()).unwrap();
        let s = solve_output(&d, &f, tw[0], &tw[1..], &[0.0, 0.0], &SolveOptions::default()).unwrap();
        assert_eq!(fib.points.len(), 1, "{tw:?}");
        assert_eq!(s.status, SolveStatus::UniquePoint);
        let y = s.y.unwrap();
        assert!(lure_core::linalg::dist(&fib.points[0], &y) <= 1e-8);
    }
}

#[test]
fn oracle_reproduces_hand_algebra() {
    let (d, f) = parts("ex3c");
    let fib = brute_force_fibre_oracle(&d, &f, 0.0, &[0.25], 3.0, 1e-3).unwrap();
    let mut pts: Vec<f64> = fib.points.iter().map(|p| p[0]).collect();
    pts.sort_by(f64::total_cmp);
    assert_eq!(pts.len(), 2);
    assert!((pts[0] + 0.5).abs() < 1e-10 && (pts[1] - 0.5).abs() < 1e-10);

    let (d, f) = parts("sec42a");
    let fib = brute_force_fibre_oracle(&d, &f, 0.0, &[0.3], 3.0, 1e-3).unwrap();
    assert_eq!(fib.segments.len(), 1);
    let (a, b) = fib.segments[0].bounds_1d();
    assert!((a - 0.3).abs() <= 1e-3 && (b - 1.3).abs() <= 1e-3);

    let (d, f) = parts("ex3a");
    assert!(brute_force_fibre_oracle(&d, &f, 0.0, &[5.0], 3.0, 1e-3).unwrap().is_empty());
    assert!(matches!(brute_force_fibre_oracle(&d, &f, 0.0, &[5.0], 0.0, 1e-3), Err(Error::Config(_))));
}

#[test]
fn planar_oracle_matches_the_solver() {
    let (d, f) = parts("ex4c");
    let w = [0.3, -0.2];
    let s = solve_output(&d, &f, 1.0, &w, &[0.0, 0.0], &SolveOptions::default()).unwrap();
    let fib = brute_force_fibre_oracle(&d, &f, 1.0, &w, 2.0, 0.05).unwrap();
    assert_eq!(fib.points.len(), 1);
    assert!(lure_core::linalg::dist(&fib.points[0], &s.y.unwrap()) < 1e-8);
}

#[test]
fn solver_rejects_bad_options_and_shapes() {
    let (d, f) = parts("ex3b");
    let bad = SolveOptions {
        max_iter: 0,
        ..SolveOptions::default()
    };
    assert!(matches!(solve_output(&d, &f, 0.0, &[0.5], &[0.0], &bad), Err(Error::Config(_))));
    assert!(matches!(
        solve_output(&d, &f, 0.0, &[0.5, 1.0], &[0.0], &SolveOptions::default()),
        Err(Error::Dimension { .. })
    ));
}

#[test]
fn residual_contract_for_random_targets() {
    let mut r = rng(17);
    for name in ["ex4a", "ex4b", "ex4c", "sec42b", "sec42c", "ex3d"] {
        let (d, f) = parts(name);
        let p = d.rows();
        for _ in 0..30 {
            let s = uniform_box(&mut r, &vec![-2.0; p + 1], &vec![2.0; p + 1]);
            let (t, w) = (s[0].abs(), &s[1..]);
            let opts = numeric();
            let sol = solve_output(&d, &f, t, w, &vec![0.0; p], &opts).unwrap();
            if let Some(y) = &sol.y {
                assert!(output_residual(&d, &f, t, y, w) <= 64.0 * opts.tol_resid.max(f64::EPSILON), "{name}");
            }
        }
    }
}
