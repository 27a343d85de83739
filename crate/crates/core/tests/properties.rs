use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

use lure_core::catalog::build_example;
use lure_core::config::{parse_config, SystemConfig};
use lure_core::derivative::{eval_f_map, finite_diff_jacobian, sample_clarke_jacobian};
use lure_core::gronwall::gronwall_bound;
use lure_core::io::format_number;
use lure_core::linalg;
use lure_core::output::{enumerate_fibre_exact, output_residual, solve_output, SolveOptions, SolveStatus};
use lure_core::{Mat, Nonlinearity};

fn cfg(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(20_261_015),
        failure_persistence: None,
        ..Config::default()
    }
}

fn mat(rows: usize, cols: usize, entries: &[f64]) -> Mat<f64> {
    let v: Vec<Vec<f64>> = entries.chunks(cols).take(rows).map(<[f64]>::to_vec).collect();
    Mat::from_f64_rows(&v).unwrap()
}

const MAPPED: [&str; 6] = ["ex3c", "ex3d", "ex4a", "ex4b", "ex4c", "sec42c"];

proptest! {
    #![proptest_config(cfg(256))]

    #[test]
    fn f_map_plus_feedthrough_is_identity(
        k in 0..MAPPED.len(),
        t in 0.0..10.0f64,
        xi in prop::collection::vec(-50.0..50.0f64, 2),
    ) {
        let e = build_example(MAPPED[k]).unwrap();
        let m = &e.system.matrices;
        let f = &e.system.nonlinearity;
        let xi = &xi[..m.dims().p];
        let big_f = eval_f_map(m, f, t, xi).unwrap();
        let back = linalg::add(&big_f, &m.d().mul_vec(&f.eval(t, xi)));
        prop_assert!(linalg::dist(&back, xi) <= 1e-12 * (1.0 + linalg::norm(xi)));
    }

    #[test]
    fn finite_differences_are_exact_on_linear_maps(
        k in prop::collection::vec(-3.0..3.0f64, 6),
        xi in prop::collection::vec(-10.0..10.0f64, 3),
        h in 1e-6..1e-2f64,
    ) {
        let km = mat(2, 3, &k);
        let f = Nonlinearity::linear(km.clone()).unwrap();
        let j = finite_diff_jacobian(&f, 0.0, &xi, h).unwrap();
        prop_assert!(j.max_abs_diff(&km) <= 1e-8);
    }

    #[test]
    fn clarke_samples_compose_with_linear_maps(
        d in 0.05..1.0f64,
        l in prop::collection::vec(-3.0..3.0f64, 3),
        t in 0.0..5.0f64,
        xi in -2.0..2.0f64,
        seed in any::<u64>(),
    ) {
        let g = build_example(&format!("sec42a:d={d}")).unwrap().system.nonlinearity;
        let lm = mat(3, 1, &l);
        let lg = g.compose_left(lm.clone()).unwrap();
        let a = sample_clarke_jacobian(&g, t, &[xi], 0.1, 8, seed).unwrap();
        let b = sample_clarke_jacobian(&lg, t, &[xi], 0.1, 8, seed).unwrap();
        prop_assert_eq!(&a.points, &b.points);
        for (ja, jb) in a.matrices.iter().zip(&b.matrices) {
            prop_assert!(lm.mul(ja).max_abs_diff(jb) <= 1e-12);
        }
    }

    #[test]
    fn lipschitz_quotients_stay_below_the_clarke_bound(
        d in 0.1..1.0f64,
        l in prop::collection::vec(-3.0..3.0f64, 2),
        a in -4.0..4.0f64,
        b in -4.0..4.0f64,
    ) {
        prop_assume!((a - b).abs() > 1e-9);
        let g = build_example(&format!("sec42a:d={d}")).unwrap().system.nonlinearity;
        let lg = g.compose_left(mat(2, 1, &l)).unwrap();
        // every piece of the map is several percent of the ball wide, so 4096
        // samples see all of them
        let s = sample_clarke_jacobian(&lg, 0.0, &[0.0], 5.0, 4096, 11).unwrap();
        let bound = s.matrices.iter().map(Mat::op_norm).fold(0.0, f64::max);
        let q = linalg::dist(&lg.eval(0.0, &[a]), &lg.eval(0.0, &[b])) / (a - b).abs();
        prop_assert!(q <= (1.0 + 1e-6) * bound, "{} > {}", q, bound);
    }

    #[test]
    fn gronwall_bound_is_monotone_and_exact_for_constant_rates(
        c in 0.0..10.0f64,
        rate in 0.0..3.0f64,
        steps in prop::collection::vec(1e-3..0.5f64, 1..40),
        h in prop::collection::vec(0.0..5.0f64, 40),
    ) {
        let mut grid = vec![0.0];
        for s in &steps {
            grid.push(grid.last().unwrap() + s);
        }
        let hv = &h[..grid.len()];
        let g = gronwall_bound(c, hv, &grid).unwrap();
        prop_assert_eq!(g[0], c);
        prop_assert!(g.windows(2).all(|w| w[1] >= w[0]));

        let flat = gronwall_bound(c, &vec![rate; grid.len()], &grid).unwrap();
        for (t, v) in grid.iter().zip(&flat) {
            let want = c * (rate * t).exp();
            prop_assert!((v - want).abs() <= 1e-12 * (1.0 + want));
        }
    }

    #[test]
    fn csv_numbers_round_trip(x in any::<f64>()) {
        let s = format_number(x);
        if x.is_nan() {
            prop_assert_eq!(s, "nan");
        } else {
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn exported_configs_round_trip(h in 0.01..0.99f64, d in 0.0..1.0f64, a in -3.0..3.0f64) {
        for spec in [format!("ex4c:h={h}"), format!("sec42a:d={d}"), format!("ex3a:a={a}")] {
            let e = build_example(&spec).unwrap();
            let cfg = SystemConfig::from_entry(&e);
            let back = parse_config(&cfg.to_toml().unwrap()).unwrap();
            prop_assert_eq!(back.system().unwrap(), e.system);
            prop_assert_eq!(back.x0().unwrap(), e.x0);
        }
    }

    #[test]
    fn exact_fibres_solve_the_output_equation(
        k in 0..4usize,
        t in 0.0..6.0f64,
        w in prop::collection::vec(-3.0..3.0f64, 2),
    ) {
        let name = ["ex3a", "ex3c", "sec42a", "sec42b"][k];
        let e = build_example(name).unwrap();
        let d = e.system.matrices.d();
        let f = &e.system.nonlinearity;
        let w = &w[..d.rows()];
        let fib = enumerate_fibre_exact(d, f, t, w).unwrap();
        for p in fib.sample_points(3) {
            prop_assert!(output_residual(d, f, t, &p, w) <= 1e-12 * (1.0 + linalg::norm(w)), "{} {:?}", name, p);
        }
    }

    #[test]
    fn unique_outputs_do_not_depend_on_the_guess(
        t in 0.0..5.0f64,
        w in prop::collection::vec(-5.0..5.0f64, 2),
        guess in prop::collection::vec(-20.0..20.0f64, 2),
    ) {
        let e = build_example("ex4c").unwrap();
        let d = e.system.matrices.d();
        let f = &e.system.nonlinearity;
        let opts = SolveOptions::default();
        let from_guess = solve_output(d, f, t, &w, &guess, &opts).unwrap();
        let from_zero = solve_output(d, f, t, &w, &[0.0, 0.0], &opts).unwrap();
        prop_assert_eq!(from_guess.status, SolveStatus::UniquePoint);
        let (a, b) = (from_guess.y.unwrap(), from_zero.y.unwrap());
        prop_assert!(linalg::dist(&a, &b) <= 1e-9);
        prop_assert!(output_residual(d, f, t, &a, &w) <= 1e-10);
    }
}
