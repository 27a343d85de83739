//! Solving the output equation `F_t(y) = w`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::fibre::{self, FibreSet};
use crate::derivative::{default_fd_step, f_map_jacobian, f_map_unchecked, finite_diff_jacobian};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::Nonlinearity;
use crate::sampling;
use crate::scalar::{vec_from_f64, vec_to_f64, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub tol_resid: f64,
    pub tol_sep: f64,
    pub max_iter: usize,
    pub n_starts: usize,
    pub search_radius: f64,
    pub seed: u64,
    /// Grid points for the scalar sign-change scan.
    pub scan_points: usize,
    /// Use exact piecewise enumeration when the structure allows it.
    pub use_exact: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_resid: 1e-10,
            tol_sep: 1e-6,
            max_iter: 100,
            n_starts: 32,
            search_radius: 10.0,
            seed: 0,
            scan_points: 2001,
            use_exact: true,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.tol_resid > 0.0) || !(self.tol_sep > 0.0) || !(self.search_radius > 0.0) {
            return Err(Error::Config(
                "tol_resid, tol_sep and search_radius must be positive".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn tol<T: Real>(&self) -> T {
        T::tol_floor(self.tol_resid, 64.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    UniquePoint,
    NoSolution,
    Multiple,
    NotConverged,
}

/// Why a `no_solution` status was reported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoSolutionCertificate {
    /// `w` lies outside the exactly computed range of `F_t`.
    RangeExclusion,
    /// Every start diverged or stagnated.
    Exhaustion { starts: usize, min_residual: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSolution<T> {
    pub status: SolveStatus,
    pub y: Option<Vec<T>>,
    pub residual: T,
    pub iterations: usize,
    pub certificate: Option<NoSolutionCertificate>,
    /// The fibre found along the way: exact when structure allowed it,
    /// otherwise the clustered multistart solutions (if the fallback ran).
    pub fibre: Option<FibreSet<T>>,
}

impl<T: Real> OutputSolution<T> {
    pub fn is_solved(&self) -> bool {
        matches!(self.status, SolveStatus::UniquePoint | SolveStatus::Multiple)
    }
}

/// `|F_t(y) - w|`, evaluated independently of any solver state.
pub fn output_residual<T: Real>(d: &Mat<T>, f: &Nonlinearity, t: T, y: &[T], w: &[T]) -> T {
    linalg::dist(&f_map_unchecked(d, f, t, y), w)
}

pub(crate) struct NewtonOutcome<T> {
    pub y: Vec<T>,
    pub residual: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Damped Newton on `F_t(y) - w` with Armijo backtracking by halving.
pub(crate) fn newton<T: Real>(
    d: &Mat<T>,
    f: &Nonlinearity,
    t: T,
    w: &[T],
    y0: &[T],
    tol: T,
    max_iter: usize,
) -> NewtonOutcome<T> {
    let resid = |y: &[T]| linalg::sub(&f_map_unchecked(d, f, t, y), w);
    let mut y = y0.to_vec();
    let mut r = resid(&y);
    let mut nr = linalg::norm(&r);
    let fail = |y: Vec<T>, nr: T, it| NewtonOutcome {
        y,
        residual: nr,
        iterations: it,
        converged: false,
    };
    if !nr.is_finite() {
        return fail(y, T::infinity(), 0);
    }
    let jacobian = |y: &[T]| -> Option<Mat<T>> {
        let jf = match f.jacobian(t, y) {
            Some(jf) => jf,
            None => finite_diff_jacobian(f, t, y, default_fd_step(y)).ok()?,
        };
        Some(f_map_jacobian(d, &jf))
    };
    let mut it = 0;
    while it < max_iter && nr > tol {
        let neg: Vec<T> = r.iter().map(|&v| -v).collect();
        let Some(delta) = jacobian(&y).and_then(|j| j.solve(&neg)) else {
            return fail(y, nr, it);
        };
        it += 1;
        let mut alpha = T::one();
        let mut accepted = false;
        while alpha > T::lit(1e-12) {
            let y_try = linalg::axpy(&y, alpha, &delta);
            let r_try = resid(&y_try);
            let n_try = linalg::norm(&r_try);
            if n_try.is_finite() && n_try <= (T::one() - T::lit(1e-4) * alpha) * nr {
                y = y_try;
                r = r_try;
                nr = n_try;
                accepted = true;
                break;
            }
            alpha = alpha / T::lit(2.0);
        }
        if !accepted {
            return fail(y, nr, it);
        }
    }
    if nr <= tol && nr > T::zero() {
        // polishing step, kept only if it does not increase the residual
        let neg: Vec<T> = r.iter().map(|&v| -v).collect();
        if let Some(delta) = jacobian(&y).and_then(|j| j.solve(&neg)) {
            let y_try = linalg::add(&y, &delta);
            let n_try = linalg::norm(&resid(&y_try));
            if n_try <= nr {
                y = y_try;
                nr = n_try;
            }
        }
    }
    NewtonOutcome {
        converged: nr <= tol,
        y,
        residual: nr,
        iterations: it,
    }
}

/// Roots of a scalar residual by sign-change bracketing on a uniform grid
/// and bisection.
pub(crate) fn scalar_scan<T: Real>(
    d: &Mat<T>,
    f: &Nonlinearity,
    t: T,
    w: T,
    lo: T,
    hi: T,
    n: usize,
) -> Vec<T> {
    let g = |x: T| f_map_unchecked(d, f, t, &[x])[0] - w;
    let n = n.max(2);
    let step = (hi - lo) / T::lit((n - 1) as f64);
    let mut roots = Vec::new();
    let mut xa = lo;
    let mut ga = g(xa);
    for k in 1..n {
        let xb = lo + step * T::lit(k as f64);
        let gb = g(xb);
        if ga == T::zero() {
            roots.push(xa);
        } else if ga.is_finite() && gb.is_finite() && ga.signum() != gb.signum() && gb != T::zero() {
            let (mut a, mut b, mut fa) = (xa, xb, ga);
            for _ in 0..200 {
                let m = a + (b - a) / T::lit(2.0);
                if m <= a || m >= b {
                    break;
                }
                let fm = g(m);
                if fm == T::zero() {
                    a = m;
                    b = m;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            roots.push(if g(a).abs() <= g(b).abs() { a } else { b });
        }
        xa = xb;
        ga = gb;
    }
    if ga == T::zero() {
        roots.push(xa);
    }
    roots
}

/// Newton from seeded low-discrepancy starts in `B(center, radius)`, plus a
/// scalar scan when `p = 1`. Returns converged candidates and the smallest
/// residual seen.
pub(crate) fn multistart_candidates<T: Real>(
    d: &Mat<T>,
    f: &Nonlinearity,
    t: T,
    w: &[T],
    center: &[T],
    opts: &SolveOptions,
) -> (Vec<(Vec<T>, T)>, T) {
    let tol = opts.tol::<T>();
    let mut found = Vec::new();
    let mut min_resid = T::infinity();
    let starts = sampling::halton_ball(&vec_to_f64(center), opts.search_radius, opts.n_starts, opts.seed);
    for s in starts {
        let y0: Vec<T> = vec_from_f64(&s);
        let out = newton(d, f, t, w, &y0, tol, opts.max_iter);
        if out.residual < min_resid {
            min_resid = out.residual;
        }
        if out.converged && linalg::all_finite(&out.y) {
            found.push((out.y, out.residual));
        }
    }
    if w.len() == 1 {
        let r = T::lit(opts.search_radius);
        for x in scalar_scan(d, f, t, w[0], center[0] - r, center[0] + r, opts.scan_points) {
            let res = output_residual(d, f, t, &[x], w);
            if res < min_resid {
                min_resid = res;
            }
            if res <= tol {
                found.push((vec![x], res));
            }
        }
    }
    (found, min_resid)
}

/// Greedy clustering with separation `sep`, deterministic given the input
/// set: candidates are sorted lexicographically first and each cluster keeps
/// its smallest-residual member.
pub(crate) fn cluster<T: Real>(mut cands: Vec<(Vec<T>, T)>, sep: T) -> Vec<Vec<T>> {
    cands.sort_by(|a, b| {
        for (x, y) in a.0.iter().zip(&b.0) {
            match x.partial_cmp(y) {
                Some(Ordering::Equal) | None => continue,
                Some(o) => return o,
            }
        }
        a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal)
    });
    let mut reps: Vec<(Vec<T>, T)> = Vec::new();
    for (y, r) in cands {
        match reps.iter_mut().find(|(c, _)| linalg::dist(c, &y) <= sep) {
            Some(rep) => {
                if r < rep.1 {
                    *rep = (y, r);
                }
            }
            None => reps.push((y, r)),
        }
    }
    reps.into_iter().map(|(y, _)| y).collect()
}

fn check_inputs<T: Real>(d: &Mat<T>, f: &Nonlinearity, w: &[T], guess: &[T], opts: &SolveOptions) -> Result<()> {
    opts.validate()?;
    let p = d.rows();
    if f.p() != p || f.m() != d.cols() {
        return Err(Error::dim("nonlinearity (p, m)", format!("({p}, {})", d.cols()), format!("({}, {})", f.p(), f.m())));
    }
    if w.len() != p {
        return Err(Error::dim("w", p, w.len()));
    }
    if guess.len() != p {
        return Err(Error::dim("y_guess", p, guess.len()));
    }
    if !linalg::all_finite(w) {
        return Err(Error::Config("output target w must be finite".into()));
    }
    Ok(())
}

/// Solve `y - D f(t, y) = w`. Exact enumeration is used for piecewise
/// structure; otherwise damped Newton from `y_guess`, falling back to
/// multistart (and a scalar scan) on singularity or stagnation. Among several
/// solutions the one nearest `y_guess` is returned with status `Multiple`.
pub fn solve_output<T: Real>(
    d: &Mat<T>,
    f: &Nonlinearity,
    t: T,
    w: &[T],
    y_guess: &[T],
    opts: &SolveOptions,
) -> Result<OutputSolution<T>> {
    check_inputs(d, f, w, y_guess, opts)?;
    if opts.use_exact && fibre::supports_exact(d, f) {
        let fib = fibre::enumerate_fibre_exact(d, f, t, w)?;
        return Ok(from_fibre(d, f, t, w, y_guess, fib, 0, None));
    }
    let guess_eval = f.eval(t, y_guess);
    if !linalg::all_finite(&guess_eval) {
        return Err(Error::Evaluation {
            t: t.as_f64(),
            point: vec_to_f64(y_guess),
        });
    }
    let tol = opts.tol::<T>();
    let first = newton(d, f, t, w, y_guess, tol, opts.max_iter);
    if first.converged {
        return Ok(OutputSolution {
            status: SolveStatus::UniquePoint,
            residual: output_residual(d, f, t, &first.y, w),
            y: Some(first.y),
            iterations: first.iterations,
            certificate: None,
            fibre: None,
        });
    }
    let (cands, min_resid) = multistart_candidates(d, f, t, w, y_guess, opts);
    let min_resid = min_resid.min(first.residual);
    let reps = cluster(cands, T::lit(2.0 * opts.tol_sep));
    let iterations = first.iterations;
    if reps.is_empty() {
        let near = min_resid <= T::lit(1e-6) * (T::one() + linalg::norm(w));
        return Ok(OutputSolution {
            status: if near { SolveStatus::NotConverged } else { SolveStatus::NoSolution },
            y: None,
            residual: min_resid,
            iterations,
            certificate: (!near).then(|| NoSolutionCertificate::Exhaustion {
                starts: opts.n_starts,
                min_residual: min_resid.as_f64(),
            }),
            fibre: None,
        });
    }
    let fib = FibreSet {
        points: reps,
        segments: vec![],
        shells: vec![],
        exact: false,
    };
    Ok(from_fibre(d, f, t, w, y_guess, fib, iterations, None))
}

#[allow(clippy::too_many_arguments)]
fn from_fibre<T: Real>(
    d: &Mat<T>,
    f: &Nonlinearity,
    t: T,
    w: &[T],
    y_guess: &[T],
    fib: FibreSet<T>,
    iterations: usize,
    certificate: Option<NoSolutionCertificate>,
) -> OutputSolution<T> {
    match fib.nearest(y_guess) {
        None => OutputSolution {
            status: SolveStatus::NoSolution,
            y: None,
            residual: T::infinity(),
            iterations,
            certificate: Some(certificate.unwrap_or(NoSolutionCertificate::RangeExclusion)),
            fibre: Some(fib),
        },
        Some(y) => OutputSolution {
            status: if fib.singleton().is_some() {
                SolveStatus::UniquePoint
            } else {
                SolveStatus::Multiple
            },
            residual: output_residual(d, f, t, &y, w),
            y: Some(y),
            iterations,
            certificate: None,
            fibre: Some(fib),
        },
    }
}

/// Fibre from Newton runs started at `n_starts` seeded points of the ball
/// `B(0, search_radius)`, clustered at separation `2 tol_sep`.
pub fn enumerate_fibre_multistart<T: Real>(
    d: &Mat<T>,
    f: &Nonlinearity,
    t: T,
    w: &[T],
    opts: &SolveOptions,
) -> Result<FibreSet<T>> {
    let zero = vec![T::zero(); d.rows()];
    check_inputs(d, f, w, &zero, opts)?;
    let tol = opts.tol::<T>();
    let mut cands = Vec::new();
    for s in sampling::halton_ball(&vec_to_f64(&zero), opts.search_radius, opts.n_starts, opts.seed) {
        let y0: Vec<T> = vec_from_f64(&s);
        let out = newton(d, f, t, w, &y0, tol, opts.max_iter);
        if out.converged && linalg::all_finite(&out.y) {
            cands.push((out.y, out.residual));
        }
    }
    Ok(FibreSet {
        points: cluster(cands, T::lit(2.0 * opts.tol_sep)),
        segments: vec![],
        shells: vec![],
        exact: false,
    })
}
