//! Sampling probes of the well-posedness hypotheses.
//!
//! Every probe evaluates one inequality on a seeded finite sample. A violation
//! yields `fail_witness` with the offending points; otherwise the verdict is
//! `pass_sampled`, or `inconclusive` when the estimate sits inside the margin.

use crate::derivative::{f_map_unchecked, finite_diff_jacobian, sample_clarke_jacobian};
use crate::error::{Error, Result};
use crate::inclusion::{check_a3_convexity, ConvexityVerdict};
use crate::linalg::{self, Mat};
use crate::model::{LureSystem, Nonlinearity, Piece};
use crate::output::{enumerate_fibre_exact, enumerate_fibre_multistart, solve_output, supports_exact, FibreSet, SolveStatus};
use crate::sampling::{self, SeededRng};

use super::grid::AnalyzerOptions;
use super::report::{theorem_applicability, AnalysisReport, CheckName, CheckRecord, StructureFlags, Verdict, Witness};

const SALT_PAIRS: u64 = 1;
const SALT_DET: u64 = 2;
const SALT_TARGETS: u64 = 3;
const SALT_IMAGE: u64 = 4;
const SALT_DIRS: u64 = 5;

/// Shrinking offsets used for pairs around a fixed base point.
const SHRINK_STEPS: [f64; 6] = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];
/// Radial pairs inside the box use this many equally spaced radii.
const BOX_RADII: usize = 16;
/// Lower bound of the separation of two fibre points that count as distinct.
const MIN_SEPARATION: f64 = 1e-3;
/// Monotonicity counts as violated when the estimate is within this of 1.
const MONO_SLACK: f64 = 1e-9;
/// A difference quotient growing by this factor along a shrinking sequence
/// signals a non-Lipschitz point.
const BLOWUP_RATIO: f64 = 100.0;

/// Everything a probe needs, fixed once per analysis.
struct Ctx<'a> {
    f: &'a Nonlinearity,
    d: Mat<f64>,
    opts: &'a AnalyzerOptions,
    times: Vec<f64>,
    p: usize,
    exact: bool,
}

/// `(t, xi, zeta)` on which a pair ratio is evaluated.
#[derive(Clone, Debug)]
struct Pair {
    t: f64,
    xi: Vec<f64>,
    zeta: Vec<f64>,
}

/// A fibre computed at a sampled target.
#[derive(Clone, Debug)]
struct FibreProbe {
    t: f64,
    w: Vec<f64>,
    fibre: FibreSet<f64>,
}

impl<'a> Ctx<'a> {
    fn new(sys: &'a LureSystem, opts: &'a AnalyzerOptions) -> Result<Self> {
        sys.check()?;
        let d = sys.matrices.d().clone();
        let p = d.rows();
        opts.validate(p)?;
        Ok(Self {
            f: &sys.nonlinearity,
            exact: opts.solver.use_exact && supports_exact(&d, &sys.nonlinearity),
            d,
            opts,
            times: opts.grid.times(),
            p,
        })
    }

    fn fmap(&self, t: f64, xi: &[f64]) -> Vec<f64> {
        f_map_unchecked(&self.d, self.f, t, xi)
    }

    fn rng(&self, salt: u64) -> SeededRng {
        sampling::rng(self.opts.grid.seed.wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
    }

    fn random_time(&self, rng: &mut SeededRng) -> f64 {
        let [ta, tb] = self.opts.grid.t_window;
        sampling::uniform_box(rng, &[ta], &[tb])[0]
    }

    fn random_point(&self, rng: &mut SeededRng) -> Vec<f64> {
        let (lo, hi) = self.opts.bounds(self.p);
        sampling::uniform_box(rng, &lo, &hi)
    }

    fn axes(&self) -> Vec<Vec<f64>> {
        (0..self.p)
            .map(|k| {
                let mut e = vec![0.0; self.p];
                e[k] = 1.0;
                e
            })
            .collect()
    }

    fn directions(&self) -> Vec<Vec<f64>> {
        sampling::probe_directions(self.p, self.opts.grid.n_dir, self.opts.grid.seed ^ SALT_DIRS)
    }

    /// Points where the piecewise structure of `F_t` changes: breakpoints and
    /// turning points of quadratic pieces (along the first axis for radial
    /// maps). Empty without exact structure.
    fn critical_points(&self, t: f64) -> Vec<Vec<f64>> {
        if !self.exact {
            return vec![];
        }
        let (profile, lift): (_, Box<dyn Fn(f64) -> Vec<f64>>) =
            if let Some(pw) = self.f.as_piecewise_scalar() {
                (pw, Box::new(|x| vec![x]))
            } else if let Some(r) = self.f.as_piecewise_radial() {
                let p = self.p;
                (
                    &r.profile,
                    Box::new(move |x| {
                        let mut e = vec![0.0; p];
                        e[0] = x;
                        e
                    }),
                )
            } else {
                return vec![];
            };
        let dscale = self.d[(0, 0)];
        let s = profile.modulation(t);
        let mut out: Vec<f64> = profile.breakpoints_at(t);
        for ((lo, hi), piece) in profile.intervals(t).into_iter().zip(&profile.pieces) {
            if let Piece::Quadratic { c1, c2, .. } = piece {
                let (c1, c2) = (c1.at(s), c2.at(s));
                if dscale != 0.0 && c2 != 0.0 {
                    let v = (1.0 - dscale * c1) / (2.0 * dscale * c2);
                    if v > lo && v < hi {
                        out.push(v);
                    }
                }
            }
        }
        if self.f.as_piecewise_radial().is_some() {
            out.retain(|&r| r > 0.0);
        }
        out.into_iter().filter(|x| x.is_finite()).map(lift).collect()
    }

    /// Targets at and next to every critical value, at every grid time.
    fn critical_targets(&self) -> Vec<(f64, Vec<f64>)> {
        let mut out = Vec::new();
        for &t in &self.times {
            for c in self.critical_points(t) {
                let w = self.fmap(t, &c);
                if !linalg::all_finite(&w) {
                    continue;
                }
                let off = 1e-3 * linalg::norm(&w).max(1.0);
                for delta in [0.0, off, -off] {
                    let mut wk = w.clone();
                    wk[0] += delta;
                    out.push((t, wk));
                }
            }
        }
        out
    }

    /// Exact fibre, or multistart with a seed derived from `(t, w)` so that
    /// the same target always yields the same fibre.
    fn fibre(&self, t: f64, w: &[f64]) -> Result<FibreSet<f64>> {
        if self.exact {
            return enumerate_fibre_exact(&self.d, self.f, t, w);
        }
        let mut so = self.opts.solver.clone();
        so.seed = std::iter::once(t)
            .chain(w.iter().copied())
            .fold(so.seed, |h, v| (h ^ v.to_bits()).wrapping_mul(0x100_0000_01B3).rotate_left(17));
        enumerate_fibre_multistart(&self.d, self.f, t, w, &so)
    }

    /// Fibres at critical targets and at images `F_t(xi)` of random box points.
    fn image_fibres(&self) -> Result<Vec<FibreProbe>> {
        let mut targets = self.critical_targets();
        let mut rng = self.rng(SALT_IMAGE);
        for &t in &self.times {
            for _ in 0..self.opts.n_w {
                let xi = self.random_point(&mut rng);
                let w = self.fmap(t, &xi);
                if linalg::all_finite(&w) {
                    targets.push((t, w));
                }
            }
        }
        self.fibres_at(targets)
    }

    fn fibres_at(&self, targets: Vec<(f64, Vec<f64>)>) -> Result<Vec<FibreProbe>> {
        let mut out = Vec::with_capacity(targets.len());
        for (t, w) in targets {
            match self.fibre(t, &w) {
                Ok(fibre) => out.push(FibreProbe { t, w, fibre }),
                Err(Error::Evaluation { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    /// Targets drawn uniformly from the box, `n_w` per grid time.
    fn box_targets(&self) -> Vec<(f64, Vec<f64>)> {
        let mut rng = self.rng(SALT_TARGETS);
        let mut out = Vec::new();
        for &t in &self.times {
            for _ in 0..self.opts.n_w {
                out.push((t, self.random_point(&mut rng)));
            }
        }
        out
    }

    /// Pairs for the Lipschitz and monotonicity estimates: fibre pairs at
    /// critical values, shrinking pairs at the box centre, pairs along rays
    /// inside the box, then random and close random pairs.
    fn pairs(&self) -> Vec<Pair> {
        let mut out = Vec::new();
        for (t, w) in self.critical_targets() {
            if let Ok(fib) = enumerate_fibre_exact(&self.d, self.f, t, &w) {
                let pts = fib.sample_points(2);
                for i in 0..pts.len() {
                    for j in i + 1..pts.len() {
                        if linalg::dist(&pts[i], &pts[j]) > 0.0 {
                            out.push(Pair {
                                t,
                                xi: pts[i].clone(),
                                zeta: pts[j].clone(),
                            });
                        }
                    }
                }
            }
        }
        let c = self.opts.center(self.p);
        for &t in &self.times {
            for pair in shrinking_pairs(t, &c, &self.axes()) {
                out.push(pair);
            }
        }
        let hw = self.opts.box_half_width;
        let dirs = self.directions();
        for &t in &self.times {
            for u in &dirs {
                for k in 1..BOX_RADII {
                    let r0 = hw * k as f64 / BOX_RADII as f64;
                    let r1 = hw * (k + 1) as f64 / BOX_RADII as f64;
                    out.push(Pair {
                        t,
                        xi: linalg::axpy(&c, r0, u),
                        zeta: linalg::axpy(&c, r1, u),
                    });
                }
            }
        }
        let mut rng = self.rng(SALT_PAIRS);
        for _ in 0..self.opts.n_pairs {
            let t = self.random_time(&mut rng);
            let xi = self.random_point(&mut rng);
            let zeta = self.random_point(&mut rng);
            out.push(Pair { t, xi, zeta });
        }
        for _ in 0..self.opts.n_pairs / 4 {
            let t = self.random_time(&mut rng);
            let xi = self.random_point(&mut rng);
            let u = sampling::unit_sphere(&mut rng, self.p);
            let zeta = linalg::axpy(&xi, 1e-4 * hw, &u);
            out.push(Pair { t, xi, zeta });
        }
        out
    }
}

fn shrinking_pairs(t: f64, c: &[f64], axes: &[Vec<f64>]) -> Vec<Pair> {
    let mut out = Vec::new();
    for e in axes {
        for &s in &SHRINK_STEPS {
            let a = linalg::axpy(c, s, e);
            out.push(Pair {
                t,
                xi: a.clone(),
                zeta: linalg::axpy(c, 2.0 * s, e),
            });
            out.push(Pair {
                t,
                xi: a,
                zeta: linalg::axpy(c, -s, e),
            });
        }
    }
    out
}

fn quotient(a: &[f64], b: &[f64], xi: &[f64], zeta: &[f64]) -> f64 {
    linalg::dist(a, b) / linalg::dist(xi, zeta)
}

/// `<D f(xi) - D f(zeta), xi - zeta> / |xi - zeta|^2`.
fn mono_ratio(d: &Mat<f64>, f: &Nonlinearity, t: f64, xi: &[f64], zeta: &[f64]) -> f64 {
    let diff = linalg::sub(&f.eval(t, xi), &f.eval(t, zeta));
    let dx = linalg::sub(xi, zeta);
    linalg::dot(&d.mul_vec(&diff), &dx) / linalg::dot(&dx, &dx)
}

fn det_value(d: &Mat<f64>, m: &Mat<f64>) -> f64 {
    Mat::identity(d.rows()).sub(&d.mul(m)).det().abs()
}

/// Radial unboundedness of `F_t`: per radius the minimum of `|F_t(r u)|` over
/// grid times and directions. Passes when every level `rho` is exceeded by
/// all minima from some radius on.
pub fn probe_radial_unboundedness(sys: &LureSystem, opts: &AnalyzerOptions) -> Result<CheckRecord> {
    radial(&Ctx::new(sys, opts)?)
}

fn radial(ctx: &Ctx) -> Result<CheckRecord> {
    let dirs = ctx.directions();
    let mut table = Vec::new();
    let mut last_arg: Option<(f64, Vec<f64>, f64)> = None;
    for &r in &ctx.opts.grid.radii {
        let mut best: Option<(f64, Vec<f64>, f64)> = None;
        for &t in &ctx.times {
            for u in &dirs {
                let xi = linalg::scale(u, r);
                let v = linalg::norm(&ctx.fmap(t, &xi));
                if v.is_finite() && best.as_ref().is_none_or(|b| v < b.2) {
                    best = Some((t, xi, v));
                }
            }
        }
        let m = best.as_ref().map_or(f64::NAN, |b| b.2);
        table.push([r, m]);
        last_arg = best;
    }
    let minima: Vec<f64> = table.iter().map(|row| row[1]).collect();
    let mut rec = CheckRecord::new(CheckName::RadialUnboundedness, Verdict::PassSampled, 0.0);
    let mut failing = None;
    for &rho in &ctx.opts.rho_levels {
        // smallest radius beyond which every minimum reaches rho
        let k = (0..=minima.len()).rev().take_while(|&k| k == minima.len() || minima[k] >= rho).last();
        match k {
            Some(k) if k < minima.len() => {
                rec.estimates.insert(format!("sigma_{rho}"), table[k][0]);
            }
            _ => {
                failing.get_or_insert(rho);
            }
        }
    }
    let top = *minima.last().unwrap_or(&f64::NAN);
    let rho_max = ctx.opts.rho_levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    rec.margin = top - rho_max;
    rec.table = table;
    if let Some(rho) = failing {
        rec.verdict = Verdict::FailWitness;
        if let Some((t, xi, v)) = last_arg {
            rec.witness = Some(Witness::at(t, xi, v, rho));
            rec.margin = v - rho;
        }
    }
    Ok(rec)
}

/// Upper Lipschitz quotient of `f` and lower quotient of `F` on sampled pairs
/// in the box, with the pairs attaining them.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzEstimate {
    pub lambda: f64,
    pub epsilon: f64,
    pub argmax: Option<Witness>,
    pub argmin: Option<Witness>,
}

pub fn estimate_lipschitz_pair(sys: &LureSystem, opts: &AnalyzerOptions) -> Result<LipschitzEstimate> {
    let ctx = Ctx::new(sys, opts)?;
    Ok(lipschitz_estimate(&ctx, &ctx.pairs()))
}

fn lipschitz_estimate(ctx: &Ctx, pairs: &[Pair]) -> LipschitzEstimate {
    let mut est = LipschitzEstimate {
        lambda: 0.0,
        epsilon: f64::INFINITY,
        argmax: None,
        argmin: None,
    };
    for pr in pairs {
        let lam = quotient(&ctx.f.eval(pr.t, &pr.xi), &ctx.f.eval(pr.t, &pr.zeta), &pr.xi, &pr.zeta);
        if lam.is_finite() && lam > est.lambda {
            est.lambda = lam;
            est.argmax = Some(Witness::pair(pr.t, pr.xi.clone(), pr.zeta.clone(), lam, 0.0));
        }
        let eps = quotient(&ctx.fmap(pr.t, &pr.xi), &ctx.fmap(pr.t, &pr.zeta), &pr.xi, &pr.zeta);
        if eps.is_finite() && eps < est.epsilon {
            est.epsilon = eps;
            est.argmin = Some(Witness::pair(pr.t, pr.xi.clone(), pr.zeta.clone(), eps, 0.0));
        }
    }
    est
}

/// Finite Lipschitz bound for `f`: fails only when a difference quotient
/// keeps growing along a shrinking sequence of pairs.
pub fn check_lipschitz_upper(sys: &LureSystem, opts: &AnalyzerOptions) -> Result<CheckRecord> {
    let ctx = Ctx::new(sys, opts)?;
    Ok(lipschitz_upper(&ctx, &ctx.pairs()))
}

fn lipschitz_upper(ctx: &Ctx, pairs: &[Pair]) -> CheckRecord {
    let est = lipschitz_estimate(ctx, pairs);
    // bases: the box centre at every time plus a few random points
    let mut bases: Vec<(f64, Vec<f64>)> = ctx.times.iter().map(|&t| (t, ctx.opts.center(ctx.p))).collect();
    let mut rng = ctx.rng(SALT_PAIRS ^ 0xff);
    for _ in 0..16 {
        let t = ctx.random_time(&mut rng);
        bases.push((t, ctx.random_point(&mut rng)));
    }
    let mut witness = None;
    'outer: for (t, c) in &bases {
        for e in ctx.axes() {
            let q = |s: f64| {
                let (a, b) = (linalg::axpy(c, s, &e), linalg::axpy(c, -s, &e));
                (quotient(&ctx.f.eval(*t, &a), &ctx.f.eval(*t, &b), &a, &b), a, b)
            };
            let (coarse, _, _) = q(SHRINK_STEPS[0]);
            let (fine, a, b) = q(SHRINK_STEPS[SHRINK_STEPS.len() - 1]);
            let bound = BLOWUP_RATIO * coarse.max(10.0);
            if fine.is_finite() && fine > bound {
                witness = Some(Witness::pair(*t, a, b, fine, bound));
                break 'outer;
            }
        }
    }
    let verdict = if witness.is_some() { Verdict::FailWitness } else { Verdict::PassSampled };
    CheckRecord::new(CheckName::LipschitzUpper, verdict, 1.0 / (1.0 + est.lambda))
        .estimate("lambda", est.lambda)
        .with_witness(witness)
}

/// Lower Lipschitz bound `|F(xi) - F(zeta)| >= eps |xi - zeta|`; fails when the
/// sampled minimum quotient falls below `epsilon_floor`.
pub fn check_lower_lipschitz(sys: &LureSystem, opts: &AnalyzerOptions) -> Result<CheckRecord> {
    let ctx = Ctx::new(sys, opts)?;
    Ok(lower_lipschitz(&ctx, &ctx.pairs()))
}

fn lower_lipschitz(ctx: &Ctx, pairs: &[Pair]) -> CheckRecord {
    let est = lipschitz_estimate(ctx, pairs);
    let floor = ctx.opts.epsilon_floor;
    let eps = if est.epsilon.is_finite() { est.epsilon } else { 0.0 };
    let mut rec = CheckRecord::new(CheckName::LowerLipschitz, Verdict::PassSampled, eps - floor)
        .estimate("epsilon", eps)
        .estimate("lambda_f_map", est.lambda);
    if eps < floor {
        rec.verdict = Verdict::FailWitness;
        rec.witness = est.argmin.map(|w| Witness { bound: floor, ..w });
    }
    rec
}

/// Local injectivity of `F_t`. With exact fibres: a segment, a shell or two
/// fibre points within `local_radius` refute it. Otherwise multistart fibres
/// at `w = F_t(xi)` must not contain two points at distance in
/// `[1e-3, local_radius]`.
pub fn check_local_injectivity(sys: &LureSystem, opts: &AnalyzerOptions) -> Result<CheckRecord> {
    let ctx = Ctx::new(sys, opts)?;
    let fibres = ctx.image_fibres()?;
    Ok(local_injectivity(&ctx, &fibres))
}

fn local_injectivity(ctx: &Ctx, fibres: &[FibreProbe]) -> CheckRecord {
    let radius = ctx.opts.local_radius;
    let tol = 1e-9_f64.max(2.0 * ctx.opts.solver.tol_resid);
    let mut closest = f64::INFINITY;
    for fp in fibres {
        let bound = tol * (1.0 + linalg::norm(&fp.w));
        let mk = |xi: Vec<f64>, zeta: Vec<f64>| {
            let v = linalg::dist(&ctx.fmap(fp.t, &xi), &ctx.fmap(fp.t, &zeta));
            Witness {
                w: Some(fp.w.clone()),
                ..Witness::pair(fp.t, xi, zeta, v, bound)
            }
        };
        if let Some(seg) = fp.fibre.segments.first() {
            let len = if seg.length.is_finite() { seg.length.min(radius) } else { radius };
            let wit = mk(seg.start.clone(), seg.point_at(len));
            return fail_local(wit);
        }
        if let Some(sh) = fp.fibre.shells.first() {
            let mut a = vec![0.0; sh.dim];
            a[0] = sh.r_min;
            let mut b = a.clone();
            b[0] = if sh.r_max > sh.r_min { sh.r_max.min(sh.r_min + radius) } else { -sh.r_min };
            return fail_local(mk(a, b));
        }
        let pts = &fp.fibre.points;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let dij = linalg::dist(&pts[i], &pts[j]);
                if dij >= MIN_SEPARATION || ctx.exact {
                    closest = closest.min(dij);
                }
                if dij <= radius && (ctx.exact || dij >= MIN_SEPARATION) {
                    return fail_local(mk(pts[i].clone(), pts[j].clone()));
                }
            }
        }
    }
    let margin = if closest.is_finite() { closest - radius } else { radius };
    CheckRecord::new(CheckName::LocalInjectivity, Verdict::PassSampled, margin)
        .estimate("fibres", fibres.len() as f64)
}

fn fail_local(w: Witness) -> CheckRecord {
    let sep = w.zeta.as_ref().map_or(0.0, |z| linalg::dist(&w.xi, z));
    CheckRecord::new(CheckName::LocalInjectivity, Verdict::FailWitness, -sep)
        .with_witness(Some(w))
}

/// `|det(I - D M)| >= delta` over finite-difference Jacobians `M` at the box
/// centre and random box points, each with Clarke samples around it.
pub fn check_determinant(sys: &LureSystem, opts: &AnalyzerOptions) -> Result<CheckRecord> {
    determinant(&Ctx::new(sys, opts)?)
}

fn determinant(ctx: &Ctx) -> Result<CheckRecord> {
    let o = ctx.opts;
    let step = o.clarke_radius / 100.0;
    let mut bases: Vec<(f64, Vec<f64>)> = ctx.times.iter().map(|&t| (t, o.center(ctx.p))).collect();
    let mut rng = ctx.rng(SALT_DET);
    for _ in 0..o.n_det_points {
        let t = ctx.random_time(&mut rng);
        bases.push((t, ctx.random_point(&mut rng)));
    }
    let mut delta = f64::INFINITY;
    let mut b_hat = 0.0_f64;
    let mut arg: Option<Witness> = None;
    for (k, (t, base)) in bases.iter().enumerate() {
        let mut mats = Vec::with_capacity(o.clarke_samples + 1);
        match finite_diff_jacobian(ctx.f, *t, base, step) {
            Ok(m) => mats.push((base.clone(), m)),
            Err(Error::Evaluation { .. }) => continue,
            Err(e) => return Err(e),
        }
        let seed = o.grid.seed.wrapping_add(k as u64);
        match sample_clarke_jacobian(ctx.f, *t, base, o.clarke_radius, o.clarke_samples, seed) {
            Ok(s) => mats.extend(s.points.into_iter().zip(s.matrices)),
            Err(Error::Evaluation { .. }) => {}
            Err(e) => return Err(e),
        }
        for (pt, m) in mats {
            if !m.is_finite() {
                continue;
            }
            b_hat = b_hat.max(m.op_norm());
            let v = det_value(&ctx.d, &m);
            if v < delta {
                delta = v;
                arg = Some(Witness {
                    step: Some(step),
                    base_point: Some(base.clone()),
                    ..Witness::at(*t, pt, v, o.delta_floor)
                });
            }
        }
    }
    let delta = if delta.is_finite() { delta } else { 0.0 };
    let mut rec = CheckRecord::new(CheckName::Determinant, Verdict::PassSampled, delta - o.delta_floor)
        .estimate("delta", delta)
        .estimate("b", b_hat);
    if delta < o.delta_floor {
        rec.verdict = Verdict::FailWitness;
        rec.witness = arg;
    }
    Ok(rec)
}

/// Growth bound: `c(rho) = max |f(t, xi)| / |xi|` over sampled `|xi| >= rho`;
/// passes when some level gives `c(rho) |D| < 1 - margin`.
pub fn check_growth(sys: &LureSystem, opts: &AnalyzerOptions) -> Result<CheckRecord> {
    growth(&Ctx::new(sys, opts)?)
}

fn growth(ctx: &Ctx) -> Result<CheckRecord> {
    let dn = ctx.d.op_norm();
    let dirs = ctx.directions();
    // per radius: the largest ratio and where it occurs
    let mut per_radius: Vec<(f64, Option<(f64, Vec<f64>, f64)>)> = Vec::new();
    for &r in &ctx.opts.grid.radii {
        let mut best: Option<(f64, Vec<f64>, f64)> = None;
        for &t in &ctx.times {
            for u in &dirs {
                let xi = linalg::scale(u, r);
                let c = dn * linalg::norm(&ctx.f.eval(t, &xi)) / r;
                if c.is_finite() && best.as_ref().is_none_or(|b| c > b.2) {
                    best = Some((t, xi, c));
                }
            }
        }
        per_radius.push((r, best));
    }
    let limit = 1.0 - ctx.opts.margin;
    let mut table = Vec::new();
    let mut best_level = f64::INFINITY;
    let mut witness = None;
    for &rho in &ctx.opts.rho_levels {
        let arg = per_radius
            .iter()
            .filter(|(r, _)| *r >= rho)
            .filter_map(|(_, b)| b.as_ref())
            .fold(None::<&(f64, Vec<f64>, f64)>, |acc, b| match acc {
                Some(a) if a.2 >= b.2 => Some(a),
                _ => Some(b),
            });
        if let Some((t, xi, c)) = arg {
            table.push([rho, *c]);
            best_level = best_level.min(*c);
            witness = Some(Witness::at(*t, xi.clone(), *c, limit));
        }
    }
    let pass = best_level < limit;
    let mut rec = CheckRecord::new(
        CheckName::Growth,
        if pass { Verdict::PassSampled } else { Verdict::FailWitness },
        limit - best_level,
    )
    .estimate("d_norm", dn);
    if let Some(&[_, c]) = table.first() {
        rec.estimates.insert("c_hat_times_d_norm".into(), c);
    }
    rec.table = table;
    if !pass {
        rec.witness = witness;
    }
    Ok(rec)
}

/// Monotonicity quotients `<D f(xi) - D f(zeta), xi - zeta> / |xi - zeta|^2`:
/// passes when their maximum stays below `1 - margin` or their minimum above
/// `1 + margin`, fails when both branches are violated.
pub fn check_monotonicity(sys: &LureSystem, opts: &AnalyzerOptions) -> Result<CheckRecord> {
    let ctx = Ctx::new(sys, opts)?;
    Ok(monotonicity(&ctx, &ctx.pairs()))
}

fn monotonicity(ctx: &Ctx, pairs: &[Pair]) -> CheckRecord {
    let mut hi: Option<(f64, &Pair)> = None;
    let mut lo: Option<(f64, &Pair)> = None;
    for pr in pairs {
        let q = mono_ratio(&ctx.d, ctx.f, pr.t, &pr.xi, &pr.zeta);
        if !q.is_finite() {
            continue;
        }
        if hi.is_none_or(|h| q > h.0) {
            hi = Some((q, pr));
        }
        if lo.is_none_or(|l| q < l.0) {
            lo = Some((q, pr));
        }
    }
    let (Some((g1, p1)), Some((g2, p2))) = (hi, lo) else {
        return CheckRecord::new(CheckName::Monotonicity, Verdict::Inconclusive, 0.0);
    };
    let m = ctx.opts.margin;
    let margin = ((1.0 - m) - g1).max(g2 - (1.0 + m));
    let rec = |v| {
        CheckRecord::new(CheckName::Monotonicity, v, margin)
            .estimate("gamma1", g1)
            .estimate("gamma2", g2)
    };
    if g1 < 1.0 - m || g2 > 1.0 + m {
        return rec(Verdict::PassSampled);
    }
    if g1 >= 1.0 - MONO_SLACK && g2 <= 1.0 + MONO_SLACK {
        let second = Witness::pair(p2.t, p2.xi.clone(), p2.zeta.clone(), g2, 1.0 + MONO_SLACK);
        let first = Witness {
            also: Some(Box::new(second)),
            ..Witness::pair(p1.t, p1.xi.clone(), p1.zeta.clone(), g1, 1.0 - MONO_SLACK)
        };
        return rec(Verdict::FailWitness).with_witness(Some(first));
    }
    rec(Verdict::Inconclusive)
}

/// Nonempty fibres `F_t^{-1}(w)` for targets drawn from the box. Exact
/// enumeration or an exhausted multistart refutes; non-convergence leaves
/// the verdict inconclusive.
pub fn check_fibre_nonempty(sys: &LureSystem, opts: &AnalyzerOptions) -> Result<CheckRecord> {
    fibre_nonempty(&Ctx::new(sys, opts)?)
}

/// `Some(true)` when a solution exists, `Some(false)` when none does, `None`
/// when the solver could not decide.
fn has_solution(ctx: &Ctx, t: f64, w: &[f64]) -> Result<(Option<bool>, f64)> {
    if ctx.exact {
        let fib = enumerate_fibre_exact(&ctx.d, ctx.f, t, w)?;
        return Ok((Some(!fib.is_empty()), 0.0));
    }
    match solve_output(&ctx.d, ctx.f, t, w, w, &ctx.opts.solver) {
        Ok(sol) => Ok(match sol.status {
            SolveStatus::UniquePoint | SolveStatus::Multiple => (Some(true), sol.residual),
            SolveStatus::NoSolution => (Some(false), sol.residual),
            SolveStatus::NotConverged => (None, sol.residual),
        }),
        Err(Error::Evaluation { .. }) => Ok((None, f64::NAN)),
        Err(e) => Err(e),
    }
}

fn fibre_nonempty(ctx: &Ctx) -> Result<CheckRecord> {
    let mut undecided = 0usize;
    let targets = ctx.box_targets();
    for (t, w) in &targets {
        match has_solution(ctx, *t, w)? {
            (Some(true), _) => {}
            (Some(false), res) => {
                let wit = Witness {
                    w: Some(w.clone()),
                    ..Witness::at(*t, w.clone(), if res.is_finite() { res } else { 0.0 }, 0.0)
                };
                return Ok(CheckRecord::new(CheckName::FibreNonempty, Verdict::FailWitness, -1.0)
                    .with_witness(Some(wit)));
            }
            (None, _) => undecided += 1,
        }
    }
    let verdict = if undecided == 0 { Verdict::PassSampled } else { Verdict::Inconclusive };
    let solved = (targets.len() - undecided) as f64 / targets.len().max(1) as f64;
    Ok(CheckRecord::new(CheckName::FibreNonempty, verdict, solved)
        .estimate("targets", targets.len() as f64)
        .estimate("undecided", undecided as f64))
}

/// Convex images `f(t, F_t^{-1}(w))` at critical, sampled and box targets.
pub fn check_fibre_convexity(sys: &LureSystem, opts: &AnalyzerOptions) -> Result<CheckRecord> {
    let ctx = Ctx::new(sys, opts)?;
    let fibres = ctx.image_fibres()?;
    fibre_convexity(&ctx, &fibres)
}

fn fibre_convexity(ctx: &Ctx, image: &[FibreProbe]) -> Result<CheckRecord> {
    let boxed = ctx.fibres_at(ctx.box_targets())?;
    let mut exact_all = true;
    let mut count = 0usize;
    for fp in image.iter().chain(&boxed) {
        count += 1;
        match check_a3_convexity(ctx.f, fp.t, &fp.w, &fp.fibre) {
            ConvexityVerdict::Violation { witness } => {
                let wit = Witness {
                    w: Some(fp.w.clone()),
                    ..Witness::pair(fp.t, witness.a, witness.b, witness.midpoint_distance, 0.0)
                };
                return Ok(CheckRecord::new(CheckName::FibreImageConvex, Verdict::FailWitness, -witness.midpoint_distance)
                    .with_witness(Some(wit)));
            }
            ConvexityVerdict::ConvexSampled => exact_all = false,
            ConvexityVerdict::ConvexExact => {}
        }
    }
    Ok(CheckRecord::new(CheckName::FibreImageConvex, Verdict::PassSampled, 0.0)
        .estimate("fibres", count as f64)
        .estimate("exact", if exact_all { 1.0 } else { 0.0 }))
}

/// Run every probe and map the results to theorem tags.
pub fn analyze(sys: &LureSystem, opts: &AnalyzerOptions) -> Result<AnalysisReport> {
    let ctx = Ctx::new(sys, opts)?;
    let pairs = ctx.pairs();
    let fibres = ctx.image_fibres()?;
    let checks = vec![
        radial(&ctx)?,
        lipschitz_upper(&ctx, &pairs),
        lower_lipschitz(&ctx, &pairs),
        local_injectivity(&ctx, &fibres),
        determinant(&ctx)?,
        growth(&ctx)?,
        monotonicity(&ctx, &pairs),
        fibre_nonempty(&ctx)?,
        fibre_convexity(&ctx, &fibres)?,
    ];
    let structure = StructureFlags {
        fibres_exact_available: ctx.exact,
        f_time_independent: sys.nonlinearity.is_time_independent(),
    };
    Ok(theorem_applicability(checks, structure))
}

/// Re-run the probes at `opts`, keeping every failure of `previous` whose
/// witness still reproduces. A refined grid therefore never turns
/// `fail_witness` into `pass_sampled`, and margins only shrink.
pub fn refine_report(sys: &LureSystem, previous: &AnalysisReport, opts: &AnalyzerOptions) -> Result<AnalysisReport> {
    let fresh = analyze(sys, opts)?;
    let mut checks = Vec::with_capacity(fresh.checks.len());
    for mut c in fresh.checks {
        if let Some(old) = previous.check(c.name) {
            if old.verdict == Verdict::FailWitness && c.verdict != Verdict::FailWitness && verify_witness(sys, opts, old)? {
                c = old.clone();
            } else {
                c.margin = c.margin.min(old.margin);
            }
        }
        checks.push(c);
    }
    Ok(theorem_applicability(checks, fresh.structure))
}

const REPRO_TOL: f64 = 1e-9;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REPRO_TOL * (1.0 + a.abs().max(b.abs()))
}

/// Re-evaluate a failure witness from scratch. `Ok(true)` when the stored
/// value is reproduced within `1e-9` and still violates the bound; records
/// without a failure pass trivially.
pub fn verify_witness(sys: &LureSystem, opts: &AnalyzerOptions, rec: &CheckRecord) -> Result<bool> {
    if rec.verdict != Verdict::FailWitness {
        return Ok(true);
    }
    let Some(w) = &rec.witness else {
        return Ok(false);
    };
    let ctx = Ctx::new(sys, opts)?;
    let (f, d, t) = (ctx.f, &ctx.d, w.t);
    let zeta = || {
        w.zeta
            .as_deref()
            .ok_or_else(|| Error::Usage(format!("{} witness needs a second point", rec.name)))
    };
    Ok(match rec.name {
        CheckName::RadialUnboundedness => {
            let v = linalg::norm(&ctx.fmap(t, &w.xi));
            close(v, w.value) && v < w.bound
        }
        CheckName::LipschitzUpper => {
            let z = zeta()?;
            let v = quotient(&f.eval(t, &w.xi), &f.eval(t, z), &w.xi, z);
            close(v, w.value) && v > w.bound
        }
        CheckName::LowerLipschitz => {
            let z = zeta()?;
            let v = quotient(&ctx.fmap(t, &w.xi), &ctx.fmap(t, z), &w.xi, z);
            close(v, w.value) && v < w.bound
        }
        CheckName::LocalInjectivity => {
            let z = zeta()?;
            let v = linalg::dist(&ctx.fmap(t, &w.xi), &ctx.fmap(t, z));
            close(v, w.value) && v <= w.bound && linalg::dist(&w.xi, z) > 0.0
        }
        CheckName::Determinant => {
            let step = w.step.ok_or_else(|| Error::Usage("determinant witness needs a step".into()))?;
            let m = finite_diff_jacobian(f, t, &w.xi, step)?;
            let v = det_value(d, &m);
            close(v, w.value) && v < w.bound
        }
        CheckName::Growth => {
            let v = d.op_norm() * linalg::norm(&f.eval(t, &w.xi)) / linalg::norm(&w.xi);
            close(v, w.value) && v >= w.bound
        }
        CheckName::Monotonicity => {
            let z = zeta()?;
            let v = mono_ratio(d, f, t, &w.xi, z);
            let first = close(v, w.value) && v >= w.bound;
            let second = match &w.also {
                Some(s) => {
                    let z2 = s.zeta.as_deref().unwrap_or(&s.xi);
                    let v2 = mono_ratio(d, f, s.t, &s.xi, z2);
                    close(v2, s.value) && v2 <= s.bound
                }
                None => false,
            };
            first && second
        }
        CheckName::FibreNonempty => {
            let target = w.w.as_deref().unwrap_or(&w.xi);
            has_solution(&ctx, t, target)?.0 == Some(false)
        }
        CheckName::FibreImageConvex => {
            let target = w.w.as_deref().ok_or_else(|| Error::Usage("convexity witness needs w".into()))?;
            let fib = ctx.fibre(t, target)?;
            match check_a3_convexity(f, t, target, &fib) {
                ConvexityVerdict::Violation { witness } => close(witness.midpoint_distance, w.value),
                _ => false,
            }
        }
    })
}
