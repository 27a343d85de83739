use lure_core::catalog::build_example;
use lure_core::inclusion::{
    check_a3_convexity, compute_fibre, select_from_fibre, simulate_inclusion, ConvexityVerdict, FibreMode,
    InclusionMethod, InclusionOptions, SelectionPolicy,
};
use lure_core::integrator::{simulate, Method, SimOptions, Termination};
use lure_core::linalg;
use lure_core::output::{output_residual, SolveOptions};
use lure_core::Error;

fn rk4(dt: f64, tmax: f64) -> SimOptions {
    SimOptions {
        method: Method::Rk4Fixed,
        dt,
        tmax,
        ..SimOptions::default()
    }
}

fn opts(method: InclusionMethod, sim: SimOptions) -> InclusionOptions {
    InclusionOptions {
        method,
        sim,
        ..InclusionOptions::default()
    }
}

fn policy(s: &str) -> SelectionPolicy {
    s.parse().unwrap()
}

#[test]
fn ex3c_upper_branch_is_an_equilibrium() {
    let e = build_example("ex3c").unwrap();
    let o = InclusionOptions {
        continuation: Some(SelectionPolicy::NearestPrevious),
        ..opts(InclusionMethod::BackwardEuler, rk4(1e-3, 2.0))
    };
    let rec = simulate_inclusion(&e.system, 0.0, &e.x0, &policy("fixed_branch(1)"), &o).unwrap();
    assert_eq!(rec.termination, Termination::ReachedTmax);
    for k in 0..rec.len() {
        assert!((rec.x[k][0] - 0.25).abs() < 1e-10);
        assert!((rec.y[k][0] - 0.5).abs() < 1e-10);
    }
    assert_eq!(rec.branches.as_ref().unwrap()[0], 1);
    assert!(rec.jumps.is_empty());
}

fn lower_branch(method: InclusionMethod) -> lure_core::integrator::TrajectoryRecord<f64> {
    let e = build_example("ex3c").unwrap();
    let o = InclusionOptions {
        continuation: Some(SelectionPolicy::NearestPrevious),
        ..opts(method, rk4(1e-4, 0.6))
    };
    simulate_inclusion(&e.system, 0.0, &e.x0, &policy("fixed_branch(0)"), &o).unwrap()
}

#[test]
fn ex3c_lower_branch_follows_the_closed_form() {
    let rec = lower_branch(InclusionMethod::BackwardEuler);
    assert_eq!(rec.y[0], vec![-0.5]);
    for k in (0..rec.len()).step_by(500) {
        let t = rec.times[k];
        let x = ((-t).exp() - 0.5).powi(2);
        assert!((rec.x[k][0] - x).abs() < 1e-4, "t = {t}");
        assert!((rec.y[k][0] + x.sqrt()).abs() < 1e-4, "t = {t}");
    }
}

#[test]
fn explicit_schemes_may_leave_on_the_constant_piece() {
    // below w = 1/4 the fibre also holds w - 3/4, as close to -1/2 as -sqrt(w);
    // following it solves x' = -x - 3/4 exactly
    for m in [InclusionMethod::RungeKutta, InclusionMethod::ForwardEuler] {
        let rec = lower_branch(m);
        for k in (1..rec.len()).step_by(500) {
            let t = rec.times[k];
            let x = (-t).exp() - 0.75;
            assert!((rec.x[k][0] - x).abs() < 1e-4, "{m:?} t = {t}");
            assert!((rec.y[k][0] - (x - 0.75)).abs() < 1e-4, "{m:?} t = {t}");
        }
        assert_eq!(rec.branches.as_ref().unwrap()[1], 2);
    }
}

#[test]
fn single_valued_fibres_reproduce_the_ode() {
    let e = build_example("ex4c").unwrap();
    let sim = rk4(1e-2, 5.0);
    let ode = simulate(&e.system, 0.0, &e.x0, &sim).unwrap();
    for p in ["min_norm", "max_norm", "fixed_branch(0)"] {
        let inc = simulate_inclusion(&e.system, 0.0, &e.x0, &policy(p), &opts(InclusionMethod::RungeKutta, sim.clone()))
            .unwrap();
        assert_eq!(inc.len(), ode.len());
        for k in 0..ode.len() {
            assert!(linalg::dist(&inc.x[k], &ode.x[k]) < 1e-8, "{p}");
            assert!(linalg::dist(&inc.y[k], &ode.y[k]) < 1e-8, "{p}");
        }
        assert!(inc.branches.as_ref().unwrap().iter().all(|&b| b == 0));
    }
}

#[test]
fn euler_schemes_converge_to_the_ode() {
    let e = build_example("ex4c").unwrap();
    let reference = simulate(&e.system, 0.0, &e.x0, &rk4(1e-3, 1.0)).unwrap();
    let target = reference.x.last().unwrap();
    let err = |method, dt| {
        let rec = simulate_inclusion(&e.system, 0.0, &e.x0, &policy("min_norm"), &opts(method, rk4(dt, 1.0))).unwrap();
        linalg::dist(rec.x.last().unwrap(), target)
    };
    for m in [InclusionMethod::ForwardEuler, InclusionMethod::BackwardEuler] {
        let (coarse, fine) = (err(m, 1e-2), err(m, 1e-3));
        assert!(fine < 1e-2, "{m:?} {fine}");
        // first order: a tenth of the step gives roughly a tenth of the error
        assert!(coarse / fine > 5.0, "{m:?} {coarse} {fine}");
    }
}

#[test]
fn deadzone_fibre_is_an_interval_with_convex_image() {
    let e = build_example("sec42a").unwrap();
    let (d, f) = (e.system.matrices.d(), &e.system.nonlinearity);
    let fib = compute_fibre(d, f, 0.0, &[0.3], &[0.0], FibreMode::Local, &SolveOptions::default()).unwrap();
    assert!(fib.exact);
    assert_eq!(fib.segments.len(), 1);
    assert_eq!(check_a3_convexity(f, 0.0, &[0.3], &fib), ConvexityVerdict::ConvexExact);

    for (p, want) in [("min_norm", 0.3), ("max_norm", 1.3), ("segment_parameter(0.5)", 0.8)] {
        let s = select_from_fibre(&fib, &policy(p), None).unwrap().unwrap();
        assert!((s.y[0] - want).abs() < 1e-12, "{p}");
    }
    let s = select_from_fibre(&fib, &SelectionPolicy::NearestPrevious, Some(&[5.0])).unwrap().unwrap();
    assert!((s.y[0] - 1.3).abs() < 1e-12);
}

#[test]
fn radial_plateau_gives_a_convex_segment() {
    let e = build_example("sec42b").unwrap();
    let (d, f) = (e.system.matrices.d(), &e.system.nonlinearity);
    let w = [0.3, 0.4];
    let fib = compute_fibre(d, f, 0.0, &w, &[0.0, 0.0], FibreMode::Local, &SolveOptions::default()).unwrap();
    assert_eq!(fib.sorted_elements().len(), 1);
    assert!(fib.points.is_empty());
    assert!(check_a3_convexity(f, 0.0, &w, &fib).is_convex());

    // the plateau is {r e : 1 <= r <= 2} along e = w / |w|
    let lo = select_from_fibre(&fib, &policy("min_norm"), None).unwrap().unwrap().y;
    let hi = select_from_fibre(&fib, &policy("max_norm"), None).unwrap().unwrap().y;
    assert!(linalg::dist(&lo, &[0.6, 0.8]) < 1e-12);
    assert!(linalg::dist(&hi, &[1.2, 1.6]) < 1e-12);

    let fib = compute_fibre(d, f, 0.0, &[0.1, 0.0], &[0.0, 0.0], FibreMode::Local, &SolveOptions::default()).unwrap();
    assert_eq!(fib.points.len(), 1);
    assert!(linalg::dist(&fib.points[0], &[0.2, 0.0]) < 1e-12);
}

#[test]
fn two_point_fibre_violates_convexity() {
    let e = build_example("ex3c").unwrap();
    let (d, f) = (e.system.matrices.d(), &e.system.nonlinearity);
    let fib = compute_fibre(d, f, 0.0, &[0.25], &[0.0], FibreMode::Local, &SolveOptions::default()).unwrap();
    let ConvexityVerdict::Violation { witness } = check_a3_convexity(f, 0.0, &[0.25], &fib) else {
        panic!("expected a violation")
    };
    // image {-3/4, 1/4}
    let mut ends = [witness.a[0], witness.b[0]];
    ends.sort_by(f64::total_cmp);
    assert_eq!(ends, [-0.75, 0.25]);
    assert!((witness.midpoint_distance - 0.5).abs() < 1e-12);
}

#[test]
fn multistart_fibre_mode_matches_exact_fibres() {
    let e = build_example("ex3c").unwrap();
    let (d, f) = (e.system.matrices.d(), &e.system.nonlinearity);
    let numeric = SolveOptions {
        use_exact: false,
        ..SolveOptions::default()
    };
    let fib = compute_fibre(d, f, 0.0, &[0.25], &[0.0], FibreMode::Multistart, &numeric).unwrap();
    assert!(!fib.exact);
    for (branch, want) in [(0, -0.5), (1, 0.5)] {
        let s = select_from_fibre(&fib, &SelectionPolicy::FixedBranch { index: branch }, None).unwrap().unwrap();
        assert!((s.y[0] - want).abs() < 1e-8);
    }
}

#[test]
fn switching_branch_is_recorded_as_a_jump() {
    let e = build_example("ex3c").unwrap();
    let o = InclusionOptions {
        continuation: Some(SelectionPolicy::FixedBranch { index: 0 }),
        ..opts(InclusionMethod::BackwardEuler, rk4(1e-3, 0.1))
    };
    let rec = simulate_inclusion(&e.system, 0.0, &e.x0, &policy("fixed_branch(1)"), &o).unwrap();
    assert_eq!(rec.jumps, vec![1]);
    let branches = rec.branches.unwrap();
    assert_eq!(branches[0], 1);
    assert!(branches[1..].iter().all(|&b| b == 0));
}

#[test]
fn empty_fibre_ends_the_inclusion_run() {
    let e = build_example("ex3b").unwrap();
    let rec = simulate_inclusion(
        &e.system,
        0.0,
        &e.x0,
        &policy("min_norm"),
        &opts(InclusionMethod::BackwardEuler, rk4(1e-4, 1.0)),
    )
    .unwrap();
    let Termination::NoOutputSolution { t, .. } = rec.termination else {
        panic!("{:?}", rec.termination)
    };
    assert!((t - 2f64.ln()).abs() < 1e-3);
}

#[test]
fn policy_errors() {
    assert!(matches!("segment_parameter(1.5)".parse::<SelectionPolicy>(), Err(Error::Config(_))));
    assert!(matches!("closest".parse::<SelectionPolicy>(), Err(Error::Config(_))));
    assert_eq!(policy("fixed_branch:2"), SelectionPolicy::FixedBranch { index: 2 });
    for p in ["nearest_previous", "min_norm", "max_norm", "fixed_branch(3)", "segment_parameter(0.25)"] {
        assert_eq!(policy(p).to_string(), p);
    }
}

#[test]
fn ex3c_policies_realize_two_solutions() {
    let e = build_example("ex3c").unwrap();
    let m = &e.system.matrices;
    let run = |first: &str| {
        let o = InclusionOptions {
            continuation: Some(SelectionPolicy::NearestPrevious),
            ..opts(InclusionMethod::BackwardEuler, rk4(1e-3, 1.0))
        };
        simulate_inclusion(&e.system, 0.0, &e.x0, &policy(first), &o).unwrap()
    };
    let (upper, lower) = (run("fixed_branch(1)"), run("fixed_branch(0)"));
    for rec in [&upper, &lower] {
        assert_eq!(rec.termination, Termination::ReachedTmax);
        for k in 0..rec.len() {
            let w = m.output_target(&rec.x[k], &[0.0]);
            let r = output_residual(m.d(), &e.system.nonlinearity, rec.times[k], &rec.y[k], &w);
            assert!(r <= 1e-10, "t = {}", rec.times[k]);
        }
    }
    let gap = upper.x.iter().zip(&lower.x).map(|(a, b)| linalg::dist(a, b)).fold(0.0, f64::max);
    assert!(gap > 0.1, "{gap}");
}
