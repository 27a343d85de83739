//! Constructors for the worked examples with their closed-form solutions.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, LN_2};
use std::fmt;
use std::sync::Arc;

use super::quad;
use crate::analyzer::{CheckName, Verdict};
use crate::error::{Error, Result};
use crate::inclusion::SelectionPolicy;
use crate::integrator::{Method, TerminationKind};
use crate::linalg::{self, Mat};
use crate::model::{
    Builtin, Coef, Gain, InputSignal, LureSystem, Nonlinearity, Piece, PiecewiseRadial, PiecewiseScalar,
    SystemMatrices, TimeFunction,
};

/// Base names of the catalog, in listing order.
pub const NAMES: [&str; 10] = [
    "ex3a", "ex3b", "ex3c", "ex3d", "ex4a", "ex4b", "ex4c", "sec42a", "sec42b", "sec42c",
];

type Curve = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// One closed-form solution `(x, x', y)`, optionally tied to a selection
/// policy that reproduces it through the inclusion simulator.
#[derive(Clone)]
pub struct ReferenceBranch {
    pub label: String,
    /// Initial and continuation policies; `None` means the single-valued
    /// simulator.
    pub policy: Option<(SelectionPolicy, SelectionPolicy)>,
    pub x: Curve,
    pub dx: Curve,
    pub y: Curve,
    /// Times where `x'` jumps.
    pub kinks: Vec<f64>,
}

impl fmt::Debug for ReferenceBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReferenceBranch")
            .field("label", &self.label)
            .field("policy", &self.policy)
            .field("kinks", &self.kinks)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub struct Reference {
    pub branches: Vec<ReferenceBranch>,
    /// Interval on which the branches are defined (right end possibly open).
    pub domain: [f64; 2],
    /// Interval over which a simulation is compared with the branches.
    pub compare: [f64; 2],
    /// Sup-error allowed on `compare`.
    pub tolerance: f64,
    pub termination: TerminationKind,
    pub escape_time: Option<f64>,
    pub escape_tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub description: String,
    pub system: LureSystem,
    pub t0: f64,
    pub x0: Vec<f64>,
    pub tmax: f64,
    pub dt: f64,
    pub method: Method,
    pub reference: Option<Reference>,
    /// Expected analyzer verdicts at default probe settings; absent for
    /// parameter values outside the documented instantiations.
    pub expected_verdicts: Option<BTreeMap<CheckName, Verdict>>,
}

/// `name` or `name:key=value[,key=value]`.
fn parse_name(spec: &str) -> Result<(&str, BTreeMap<String, f64>)> {
    let (base, rest) = match spec.split_once(':') {
        Some((b, r)) => (b, Some(r)),
        None => (spec, None),
    };
    let mut params = BTreeMap::new();
    for kv in rest.into_iter().flat_map(|r| r.split(',')) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("bad example parameter '{kv}' (expected key=value)")))?;
        let v = parse_number(v.trim())?;
        params.insert(k.trim().to_string(), v);
    }
    Ok((base, params))
}

/// Decimal number or fraction `a/b`.
fn parse_number(s: &str) -> Result<f64> {
    let bad = || Error::Usage(format!("bad number '{s}'"));
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            Ok(a / b)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

fn take(params: &mut BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.remove(key).unwrap_or(default)
}

pub fn list() -> Vec<(&'static str, &'static str)> {
    NAMES.iter().map(|&n| (n, describe(n))).collect()
}

fn describe(name: &str) -> &'static str {
    match name {
        "ex3a" => "non-surjective I - Df: no output solution at t0 when |a| > 1 (param a, default 1.5)",
        "ex3b" => "bounded finite escape at ln 2 without blow-up",
        "ex3c" => "non-injective I - Df: two solutions from x0 = 1/4",
        "ex3d" => "finite-time blow-up at pi/2 with linearly bounded f",
        "ex4a" => "rotated gain, g(s) = s, theta(t) = t, D = I",
        "ex4b" => "orthogonal gain g(s) = 1/sqrt(1 + s^2), D = I/2",
        "ex4c" => "saturating radial h xi / (1 + |xi|), D = I (param h, default 1/2)",
        "sec42a" => "deadzone-saturation with width d (param d, default 0.3), D = 1",
        "sec42b" => "three-piece radial nonlinearity, D = I/2",
        "sec42c" => "time-dependent saturation h(t) = min(1, t/2), D = I",
        _ => "",
    }
}

/// Build a catalog entry. Parameters follow a colon, e.g. `ex4c:h=1` or
/// `ex3a:a=-2`.
pub fn build_example(spec: &str) -> Result<CatalogEntry> {
    let (base, mut params) = parse_name(spec)?;
    let mut entry = match base {
        "ex3a" => ex3a(take(&mut params, "a", 1.5))?,
        "ex3b" => ex3b()?,
        "ex3c" => ex3c()?,
        "ex3d" => ex3d()?,
        "ex4a" => ex4a()?,
        "ex4b" => ex4b()?,
        "ex4c" => ex4c(take(&mut params, "h", 0.5))?,
        "sec42a" => sec42a(take(&mut params, "d", 0.3))?,
        "sec42b" => sec42b()?,
        "sec42c" => sec42c()?,
        _ => {
            return Err(Error::Usage(format!(
                "unknown example '{base}'; valid names: {}",
                NAMES.join(", ")
            )))
        }
    };
    if let Some(k) = params.keys().next() {
        return Err(Error::Usage(format!("example '{base}' has no parameter '{k}'")));
    }
    entry.name = spec.to_string();
    entry.description = describe(base).to_string();
    Ok(entry)
}

fn verdicts(row: [Verdict; 9]) -> Option<BTreeMap<CheckName, Verdict>> {
    use CheckName::*;
    let names = [
        RadialUnboundedness,
        LipschitzUpper,
        LocalInjectivity,
        LowerLipschitz,
        Determinant,
        Growth,
        Monotonicity,
        FibreNonempty,
        FibreImageConvex,
    ];
    Some(names.into_iter().zip(row).collect())
}

const P: Verdict = Verdict::PassSampled;
const F: Verdict = Verdict::FailWitness;
const I: Verdict = Verdict::Inconclusive;

fn curve(f: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Curve {
    Arc::new(f)
}

fn blank(system: LureSystem, x0: Vec<f64>) -> CatalogEntry {
    CatalogEntry {
        name: String::new(),
        description: String::new(),
        system,
        t0: 0.0,
        x0,
        tmax: 10.0,
        dt: 1e-3,
        method: Method::Rk4Fixed,
        reference: None,
        expected_verdicts: None,
    }
}

/// Shared system of the first two examples.
fn ex3ab_system() -> Result<LureSystem> {
    let m = SystemMatrices::from_rows(
        &[vec![1.0, 0.0], vec![0.0, 0.0]],
        &[vec![0.0], vec![1.0]],
        &[vec![0.0], vec![1.0]],
        &[vec![1.0, 0.0]],
        &[vec![1.0]],
        &[vec![1.0]],
    )?;
    let f = PiecewiseScalar::new(
        TimeFunction::default(),
        vec![Coef::new(-2.0), Coef::new(2.0)],
        vec![Piece::affine(1.0, 1.0), Piece::affine(0.0, 0.5), Piece::affine(-1.0, 1.0)],
    )?;
    LureSystem::new(m, Nonlinearity::piecewise_scalar(f)?, InputSignal::zero(1))
}

const EX3_ROW: [Verdict; 9] = [F, P, F, F, F, F, F, F, P];

fn ex3a(a: f64) -> Result<CatalogEntry> {
    let mut e = blank(ex3ab_system()?, vec![a, 0.0]);
    e.tmax = 1.0;
    if a.abs() > 1.0 {
        e.reference = Some(Reference {
            branches: vec![],
            domain: [0.0, 0.0],
            compare: [0.0, 0.0],
            tolerance: 0.0,
            termination: TerminationKind::NoOutputSolution,
            escape_time: Some(0.0),
            escape_tolerance: 0.0,
        });
    }
    e.expected_verdicts = verdicts(EX3_ROW);
    Ok(e)
}

fn ex3b() -> Result<CatalogEntry> {
    let mut e = blank(ex3ab_system()?, vec![0.5, 0.0]);
    e.tmax = 1.0;
    e.dt = 1e-4;
    e.reference = Some(Reference {
        branches: vec![ReferenceBranch {
            label: "y = e^t".into(),
            policy: None,
            x: curve(|t| vec![t.exp() / 2.0, (t.exp() - 1.0) / 2.0]),
            dx: curve(|t| vec![t.exp() / 2.0, t.exp() / 2.0]),
            y: curve(|t| vec![t.exp()]),
            kinks: vec![],
        }],
        domain: [0.0, LN_2],
        compare: [0.0, LN_2],
        tolerance: 1e-6,
        termination: TerminationKind::NoOutputSolution,
        escape_time: Some(LN_2),
        escape_tolerance: 1e-3,
    });
    e.expected_verdicts = verdicts(EX3_ROW);
    Ok(e)
}

fn ex3c() -> Result<CatalogEntry> {
    let m = SystemMatrices::from_rows(
        &[vec![-1.0]],
        &[vec![1.0]],
        &[vec![1.0]],
        &[vec![1.0]],
        &[vec![1.0]],
        &[vec![1.0]],
    )?;
    let f = PiecewiseScalar::new(
        TimeFunction::default(),
        vec![Coef::new(-0.5), Coef::new(0.5)],
        vec![Piece::constant(-0.75), Piece::quadratic(0.0, 1.0, -1.0), Piece::constant(0.25)],
    )?;
    let sys = LureSystem::new(m, Nonlinearity::piecewise_scalar(f)?, InputSignal::zero(1))?;
    let mut e = blank(sys, vec![0.25]);
    e.tmax = 2.0;
    e.dt = 1e-4;
    // F^{-1}(1/4) = {-1/2, 1/2}; branch 0 is -1/2 in fibre order
    let follow = SelectionPolicy::NearestPrevious;
    let upper = ReferenceBranch {
        label: "x = 1/4, y = 1/2".into(),
        policy: Some((SelectionPolicy::FixedBranch { index: 1 }, follow.clone())),
        x: curve(|_| vec![0.25]),
        dx: curve(|_| vec![0.0]),
        y: curve(|_| vec![0.5]),
        kinks: vec![],
    };
    let lower = ReferenceBranch {
        label: "x = (e^-t - 1/2)^2, y = -sqrt(x)".into(),
        policy: Some((SelectionPolicy::FixedBranch { index: 0 }, follow)),
        x: curve(|t| vec![if t <= LN_2 { ((-t).exp() - 0.5).powi(2) } else { 0.0 }]),
        dx: curve(|t| {
            vec![if t <= LN_2 {
                -2.0 * ((-t).exp() - 0.5) * (-t).exp()
            } else {
                0.0
            }]
        }),
        y: curve(|t| vec![if t <= LN_2 { 0.5 - (-t).exp() } else { 0.0 }]),
        kinks: vec![LN_2],
    };
    e.reference = Some(Reference {
        branches: vec![upper, lower],
        domain: [0.0, f64::INFINITY],
        compare: [0.0, 2.0],
        tolerance: 1e-4,
        termination: TerminationKind::ReachedTmax,
        escape_time: None,
        escape_tolerance: 0.0,
    });
    e.expected_verdicts = verdicts([P, P, F, F, F, P, F, P, F]);
    Ok(e)
}

fn ex3d() -> Result<CatalogEntry> {
    let m = SystemMatrices::from_rows(
        &[vec![1.0, -1.0], vec![-1.0, 1.0]],
        &[vec![1.0], vec![-1.0]],
        &[vec![1.0], vec![-1.0]],
        &[vec![1.0, 1.0]],
        &[vec![1.0]],
        &[vec![1.0]],
    )?;
    let f = PiecewiseScalar::new(TimeFunction::default(), vec![], vec![Piece::XMinusAtan])?;
    let v = InputSignal::Polynomial {
        coefficients: vec![vec![0.0, 1.0]],
    };
    let sys = LureSystem::new(m, Nonlinearity::piecewise_scalar(f)?, v)?;
    let mut e = blank(sys, vec![-1.0, 1.0]);
    e.tmax = 2.0;
    e.dt = 1e-3;
    e.method = Method::Rk45Adaptive;
    // x(t) = e^{2t} (int_0^t e^{-2s} tan s ds - 1) B
    let x = |t: f64| {
        let i = quad::integrate(|s| (-2.0 * s).exp() * s.tan(), 0.0, t, 1e-14);
        let c = (2.0 * t).exp() * (i - 1.0);
        vec![c, -c]
    };
    e.reference = Some(Reference {
        branches: vec![ReferenceBranch {
            label: "y = tan t".into(),
            policy: None,
            x: curve(x),
            dx: curve(move |t| {
                let c = x(t)[0];
                vec![2.0 * c + t.tan(), -2.0 * c - t.tan()]
            }),
            y: curve(|t| vec![t.tan()]),
            kinks: vec![],
        }],
        domain: [0.0, FRAC_PI_2],
        compare: [0.0, 1.2],
        tolerance: 1e-5,
        termination: TerminationKind::BlowUp,
        escape_time: Some(FRAC_PI_2),
        escape_tolerance: 1e-2,
    });
    e.expected_verdicts = verdicts([F, P, P, P, P, F, P, F, P]);
    Ok(e)
}

/// `A = -I`, `B = C = I`, zero input columns and feedthrough `d I`.
fn identity_loop(p: usize, d: f64, f: Nonlinearity) -> Result<LureSystem> {
    let m = SystemMatrices::new(
        Mat::identity(p).scale(-1.0),
        Mat::identity(p),
        Mat::zeros(p, 1),
        Mat::identity(p),
        Mat::identity(p).scale(d),
        Mat::zeros(p, 1),
    )?;
    LureSystem::new(m, f, InputSignal::zero(1))
}

fn ex4a() -> Result<CatalogEntry> {
    let f = Nonlinearity::builtin(Builtin::RotatedGain {
        gain: Gain::Identity,
        angle: TimeFunction::Affine { offset: 0.0, slope: 1.0 },
    })?;
    let mut e = blank(identity_loop(2, 1.0, f)?, vec![1.0, 0.0]);
    e.expected_verdicts = verdicts([P, P, P, F, F, F, F, P, P]);
    Ok(e)
}

fn ex4b() -> Result<CatalogEntry> {
    let f = Nonlinearity::builtin(Builtin::OrthogonalGain {
        gain: Gain::InvSqrtOnePlusSq,
        angle: TimeFunction::constant(0.0),
        dim: 2,
    })?;
    let mut e = blank(identity_loop(2, 0.5, f)?, vec![1.0, 0.0]);
    e.expected_verdicts = verdicts([P; 9]);
    Ok(e)
}

fn ex4c(h: f64) -> Result<CatalogEntry> {
    if !(h <= 1.0) {
        return Err(Error::Usage(format!("ex4c needs h <= 1, got {h}")));
    }
    let f = Nonlinearity::builtin(Builtin::SaturatingRadial {
        h: TimeFunction::constant(h),
        dim: 2,
    })?;
    let mut e = blank(identity_loop(2, 1.0, f)?, vec![1.0, 0.0]);
    e.expected_verdicts = if h == 1.0 {
        verdicts([P, P, P, F, F, P, I, P, P])
    } else if h == 0.5 {
        verdicts([P; 9])
    } else {
        None
    };
    Ok(e)
}

fn sec42a(d: f64) -> Result<CatalogEntry> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Usage(format!("sec42a needs d in [0, 1], got {d}")));
    }
    // breakpoints -(1 + d), -d, d, 1 + d with s(t) = d
    let f = PiecewiseScalar::new(
        TimeFunction::constant(d),
        vec![
            Coef::modulated(-1.0, -1.0),
            Coef::modulated(0.0, -1.0),
            Coef::modulated(0.0, 1.0),
            Coef::modulated(1.0, 1.0),
        ],
        vec![
            Piece::constant(-1.0),
            Piece::Affine {
                c0: Coef::modulated(0.0, 1.0),
                c1: Coef::new(1.0),
            },
            Piece::constant(0.0),
            Piece::Affine {
                c0: Coef::modulated(0.0, -1.0),
                c1: Coef::new(1.0),
            },
            Piece::constant(1.0),
        ],
    )?;
    let mut e = blank(identity_loop(1, 1.0, Nonlinearity::piecewise_scalar(f)?)?, vec![2.0]);
    e.tmax = 5.0;
    // saturated regime: y = x + 1 > 1 + d for all t
    e.reference = Some(Reference {
        branches: vec![ReferenceBranch {
            label: "x = 1 + e^-t".into(),
            policy: None,
            x: curve(|t| vec![1.0 + (-t).exp()]),
            dx: curve(|t| vec![-(-t).exp()]),
            y: curve(|t| vec![2.0 + (-t).exp()]),
            kinks: vec![],
        }],
        domain: [0.0, f64::INFINITY],
        compare: [0.0, 5.0],
        tolerance: 1e-6,
        termination: TerminationKind::ReachedTmax,
        escape_time: None,
        escape_tolerance: 0.0,
    });
    e.expected_verdicts = if d == 0.3 { verdicts([P, P, F, F, F, P, F, P, P]) } else { None };
    Ok(e)
}

fn sec42b() -> Result<CatalogEntry> {
    let profile = PiecewiseScalar::new(
        TimeFunction::default(),
        vec![Coef::new(1.0), Coef::new(2.0)],
        vec![Piece::affine(0.0, 1.0), Piece::affine(-1.0, 2.0), Piece::affine(1.0, 1.0)],
    )?;
    let f = Nonlinearity::piecewise_radial(PiecewiseRadial::new(2, profile)?)?;
    let mut e = blank(identity_loop(2, 0.5, f)?, vec![1.0, 0.0]);
    e.tmax = 2.0;
    // |x| > 1/2 keeps y in the outer piece: |x|' = |x| + 2
    e.reference = Some(Reference {
        branches: vec![ReferenceBranch {
            label: "|x| = 3 e^t - 2".into(),
            policy: None,
            x: curve(|t| vec![3.0 * t.exp() - 2.0, 0.0]),
            dx: curve(|t| vec![3.0 * t.exp(), 0.0]),
            y: curve(|t| {
                let r = 3.0 * t.exp() - 2.0;
                vec![2.0 * r + 1.0, 0.0]
            }),
            kinks: vec![],
        }],
        domain: [0.0, f64::INFINITY],
        compare: [0.0, 2.0],
        tolerance: 1e-6,
        termination: TerminationKind::ReachedTmax,
        escape_time: None,
        escape_tolerance: 0.0,
    });
    e.expected_verdicts = verdicts([P, P, F, F, F, P, F, P, P]);
    Ok(e)
}

fn sec42c() -> Result<CatalogEntry> {
    let profile = PiecewiseScalar::new(
        TimeFunction::ClampedAffine {
            offset: 0.0,
            slope: 0.5,
            min: 0.0,
            max: 1.0,
        },
        vec![Coef::new(1.0)],
        vec![
            Piece::Affine {
                c0: Coef::new(0.0),
                c1: Coef::modulated(0.0, 1.0),
            },
            Piece::Affine {
                c0: Coef::modulated(0.0, 1.0),
                c1: Coef::new(0.0),
            },
        ],
    )?;
    let f = Nonlinearity::piecewise_radial(PiecewiseRadial::new(2, profile)?)?;
    let mut e = blank(identity_loop(2, 1.0, f)?, vec![1.0, 0.0]);
    e.tmax = 3.0;
    e.expected_verdicts = verdicts([P, P, F, F, F, P, F, P, P]);
    Ok(e)
}

/// Largest residual of `x' = A x + B f(t, y) + B_e v` and of the output
/// equation over 1000 points of the reference domain, each relative to the
/// size of the terms involved. Points at kinks are skipped.
pub fn reference_residual(entry: &CatalogEntry, branch: &ReferenceBranch, domain: [f64; 2]) -> f64 {
    let sys = &entry.system;
    let m = &sys.matrices;
    let [a, b] = domain;
    let mut worst = 0.0f64;
    for k in 0..1000 {
        let t = a + (b - a) * k as f64 / 1000.0;
        if branch.kinks.iter().any(|&s| (s - t).abs() < 1e-12) {
            continue;
        }
        let (x, dx, y) = ((branch.x)(t), (branch.dx)(t), (branch.y)(t));
        let u = sys.nonlinearity.eval(t, &y);
        let v = sys.input.eval(t);
        let rhs = m.state_rhs(&x, &u, &v);
        let out = linalg::add(&m.output_target(&x, &v), &m.d().mul_vec(&u));
        let scale = 1.0 + [&x, &dx, &y, &u, &v].iter().map(|z| linalg::norm(z)).fold(0.0, f64::max);
        worst = worst
            .max(linalg::dist(&dx, &rhs) / scale)
            .max(linalg::dist(&y, &out) / scale);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_builds() {
        for (name, desc) in list() {
            let e = build_example(name).unwrap();
            assert_eq!(e.name, name);
            assert!(!desc.is_empty());
            assert!(e.expected_verdicts.is_some(), "{name}");
            assert_eq!(e.x0.len(), e.system.matrices.dims().n);
        }
    }

    #[test]
    fn parameters_and_errors() {
        assert_eq!(build_example("ex3a:a=-2").unwrap().x0, vec![-2.0, 0.0]);
        assert_eq!(build_example("ex4c:h=1/2").unwrap().expected_verdicts, build_example("ex4c").unwrap().expected_verdicts);
        assert!(build_example("ex4c:h=0.7").unwrap().expected_verdicts.is_none());
        let msg = build_example("ex9").unwrap_err().to_string();
        assert!(msg.contains("sec42c"), "{msg}");
        assert!(build_example("ex3b:q=1").is_err());
        assert!(build_example("ex4c:h=2").is_err());
        assert!(build_example("ex4c:h").is_err());
    }

    #[test]
    fn references_satisfy_the_equations() {
        for name in NAMES {
            let e = build_example(name).unwrap();
            let Some(r) = &e.reference else { continue };
            let end = if r.domain[1].is_finite() { r.domain[1] } else { e.tmax };
            for br in &r.branches {
                let res = reference_residual(&e, br, [r.domain[0], end]);
                assert!(res < 1e-9, "{name} / {}: {res}", br.label);
            }
        }
    }

    #[test]
    fn sec42b_fibre_at_half_is_a_radial_segment() {
        let e = build_example("sec42b").unwrap();
        let fib = crate::output::enumerate_fibre_exact(e.system.matrices.d(), &e.system.nonlinearity, 0.0, &[0.5, 0.0]).unwrap();
        assert_eq!(fib.segments.len(), 1);
        let (a, b) = (fib.segments[0].start.clone(), fib.segments[0].end().unwrap());
        assert!((a[0] - 1.0).abs() < 1e-12 && (b[0] - 2.0).abs() < 1e-12, "{a:?} {b:?}");
    }
}
