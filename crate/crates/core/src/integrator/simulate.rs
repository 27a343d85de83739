//! Fixed-step and adaptive integration of the eliminated state equation.

use std::collections::VecDeque;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::record::{Termination, TrajectoryRecord};
use super::rk::{dp45_step, error_norm, rk4_step, NearestOutput, OutputRule, Plant, Sample};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::LureSystem;
use crate::output::SolveOptions;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rk4Fixed,
    Rk45Adaptive,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" | "rk4_fixed" => Ok(Method::Rk4Fixed),
            "rk45" | "rk45_adaptive" | "dopri5" => Ok(Method::Rk45Adaptive),
            _ => Err(Error::Config(format!(
                "unknown method '{s}' (expected rk4_fixed or rk45_adaptive)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    pub method: Method,
    /// Fixed step, or the initial step of the adaptive method.
    pub dt: f64,
    pub tmax: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub rtol: f64,
    pub atol: f64,
    /// `|x|` above this counts as blow-up.
    pub blowup_threshold: f64,
    /// Accepted steps over which `|x|` must grow before a step collapse is
    /// classified as blow-up.
    pub growth_window: usize,
    /// Growth of `|y|` or `|x|` relative to the initial sample required for
    /// such a classification.
    pub growth_factor: f64,
    /// Resolution of escape-time refinement.
    pub time_tol: f64,
    pub solver: SolveOptions,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            method: Method::Rk4Fixed,
            dt: 1e-3,
            tmax: 10.0,
            dt_min: 1e-12,
            dt_max: 0.1,
            rtol: 1e-8,
            atol: 1e-10,
            blowup_threshold: 1e8,
            growth_window: 5,
            growth_factor: 1e3,
            time_tol: 1e-8,
            solver: SolveOptions::default(),
        }
    }
}

impl SimOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("dt_min", self.dt_min),
            ("dt_max", self.dt_max),
            ("rtol", self.rtol),
            ("blowup_threshold", self.blowup_threshold),
            ("growth_factor", self.growth_factor),
            ("time_tol", self.time_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.atol >= 0.0) {
            return Err(Error::Config("atol must be non-negative".into()));
        }
        if !self.tmax.is_finite() {
            return Err(Error::Config("tmax must be finite".into()));
        }
        if self.dt_min > self.dt_max {
            return Err(Error::Config("dt_min must not exceed dt_max".into()));
        }
        if self.growth_window == 0 {
            return Err(Error::Config("growth_window must be at least 1".into()));
        }
        self.solver.validate()
    }
}

/// Starting guess for the first output solve: the solution of the equation
/// linearized at the origin, `(I - D J)^{-1} (C x0 + D_e v(t0))`, when an
/// analytic Jacobian is available and the matrix is invertible.
pub(crate) fn initial_guess<T: Real>(plant: &Plant<'_, T>, t0: T, x0: &[T]) -> Vec<T> {
    let w = plant.target(t0, x0);
    let p = w.len();
    plant
        .f
        .jacobian(t0, &vec![T::zero(); p])
        .and_then(|j| Mat::identity(p).sub(&plant.d().mul(&j)).solve(&w))
        .filter(|y| linalg::all_finite(y))
        .unwrap_or(w)
}

pub(crate) fn check_start<T: Real>(sys: &LureSystem, t0: T, x0: &[T], opts: &SimOptions) -> Result<()> {
    opts.validate()?;
    sys.check()?;
    let n = sys.matrices.dims().n;
    if x0.len() != n {
        return Err(Error::dim("x0", n, x0.len()));
    }
    if !linalg::all_finite(x0) {
        return Err(Error::Config("x0 must be finite".into()));
    }
    if !(t0 >= T::zero()) {
        return Err(Error::Config("t0 must be non-negative".into()));
    }
    if T::lit(opts.tmax) < t0 {
        return Err(Error::Config(format!("tmax ({}) is before t0 ({t0})", opts.tmax)));
    }
    Ok(())
}

/// Integrate `x' = A x + B f(t, y) + B_e v` with `y` solved from the output
/// equation at every Runge-Kutta stage.
pub fn simulate<T: Real>(sys: &LureSystem, t0: T, x0: &[T], opts: &SimOptions) -> Result<TrajectoryRecord<T>> {
    check_start(sys, t0, x0, opts)?;
    let plant = Plant::new(sys);
    let guess = initial_guess(&plant, t0, x0);
    let mut rule = NearestOutput {
        opts: opts.solver.clone(),
    };
    integrate(&plant, &mut rule, t0, x0, &guess, opts, TrajectoryRecord::new(false))
}

pub(crate) fn record_sample<T: Real>(rec: &mut TrajectoryRecord<T>, t: T, x: Vec<T>, s: &Sample<T>) {
    if s.multiple {
        rec.stats.multiple_fibre_samples += 1;
    }
    if let Some(b) = rec.branches.as_mut() {
        b.push(s.branch);
    }
    rec.push(t, x, s.y.clone(), s.u.clone(), s.residual);
}

pub(crate) fn integrate<T: Real, R: OutputRule<T>>(
    plant: &Plant<'_, T>,
    rule: &mut R,
    t0: T,
    x0: &[T],
    guess: &[T],
    opts: &SimOptions,
    mut rec: TrajectoryRecord<T>,
) -> Result<TrajectoryRecord<T>> {
    let Some(first) = rule.output(plant, t0, x0, guess)? else {
        let t = t0.as_f64();
        rec.termination = Termination::NoOutputSolution { t, bracket: [t, t] };
        return Ok(rec);
    };
    record_sample(&mut rec, t0, x0.to_vec(), &first);
    match opts.method {
        Method::Rk4Fixed => fixed(plant, rule, t0, x0, first, opts, rec),
        Method::Rk45Adaptive => adaptive(plant, rule, t0, x0, first, opts, rec),
    }
}

fn fixed<T: Real, R: OutputRule<T>>(
    plant: &Plant<'_, T>,
    rule: &mut R,
    t0: T,
    x0: &[T],
    first: Sample<T>,
    opts: &SimOptions,
    mut rec: TrajectoryRecord<T>,
) -> Result<TrajectoryRecord<T>> {
    let dt = T::lit(opts.dt);
    let tmax = T::lit(opts.tmax);
    let n_steps = ((tmax - t0) / dt - T::lit(1e-9)).ceil().max(T::zero()).to_usize().unwrap_or(0);
    let (mut t, mut x, mut cur) = (t0, x0.to_vec(), first);
    rec.stats.last_dt = opts.dt;
    for k in 0..n_steps {
        let t_next = if k + 1 == n_steps { tmax } else { t0 + T::lit((k + 1) as f64) * dt };
        let h = t_next - t;
        rec.stats.last_dt = h.as_f64();
        let Some((x_new, s)) = rk4_step(plant, rule, t, &x, &cur, h)? else {
            rec.stats.failed_stage_solves += 1;
            rec.termination = Termination::NoOutputSolution {
                t: t.as_f64(),
                bracket: [t.as_f64(), t_next.as_f64()],
            };
            return Ok(rec);
        };
        rec.stats.accepted_steps += 1;
        if !linalg::all_finite(&x_new) {
            rec.termination = Termination::BlowUp { t: t_next.as_f64() };
            return Ok(rec);
        }
        let big = linalg::norm(&x_new).as_f64() > opts.blowup_threshold;
        record_sample(&mut rec, t_next, x_new.clone(), &s);
        if big {
            rec.termination = Termination::BlowUp { t: t_next.as_f64() };
            return Ok(rec);
        }
        (t, x, cur) = (t_next, x_new, s);
    }
    rec.termination = Termination::ReachedTmax;
    Ok(rec)
}

fn adaptive<T: Real, R: OutputRule<T>>(
    plant: &Plant<'_, T>,
    rule: &mut R,
    t0: T,
    x0: &[T],
    first: Sample<T>,
    opts: &SimOptions,
    mut rec: TrajectoryRecord<T>,
) -> Result<TrajectoryRecord<T>> {
    let tmax = T::lit(opts.tmax);
    let dt_min = T::lit(opts.dt_min);
    let dt_max = T::lit(opts.dt_max);
    let y0_norm = linalg::norm(&first.y);
    let (mut t, mut x, mut cur) = (t0, x0.to_vec(), first);
    let mut h = T::lit(opts.dt).min(dt_max);
    let mut norms: VecDeque<T> = VecDeque::from([linalg::norm(&x)]);
    let mut failed_solve = false;
    loop {
        let remaining = tmax - t;
        if remaining <= dt_min {
            rec.termination = Termination::ReachedTmax;
            return Ok(rec);
        }
        let last = h >= remaining;
        let h_try = if last { remaining } else { h };
        rec.stats.last_dt = h_try.as_f64();
        let step = dp45_step(plant, rule, t, &x, &cur, h_try)?;
        let Some(step) = step else {
            failed_solve = true;
            rec.stats.failed_stage_solves += 1;
            rec.stats.rejected_steps += 1;
            h = h_try * T::lit(0.5);
            if h < dt_min {
                rec.termination = collapse(&rec, &norms, y0_norm, linalg::norm(x0), t, h_try, failed_solve, opts);
                return Ok(rec);
            }
            continue;
        };
        let finite = linalg::all_finite(&step.x) && linalg::all_finite(&step.error);
        let err = if finite {
            error_norm(&step.error, &x, &step.x, opts.atol, opts.rtol)
        } else {
            T::infinity()
        };
        if err <= T::one() {
            failed_solve = false;
            let t_new = if last { tmax } else { t + h_try };
            rec.stats.accepted_steps += 1;
            let big = linalg::norm(&step.x).as_f64() > opts.blowup_threshold;
            record_sample(&mut rec, t_new, step.x.clone(), &step.sample);
            if big {
                rec.termination = Termination::BlowUp { t: t_new.as_f64() };
                return Ok(rec);
            }
            norms.push_back(linalg::norm(&step.x));
            if norms.len() > opts.growth_window + 1 {
                norms.pop_front();
            }
            (t, x, cur) = (t_new, step.x, step.sample);
            let factor = if err > T::zero() {
                (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
            } else {
                T::lit(5.0)
            };
            // a step clipped at tmax does not shrink the controller's step
            h = (h.max(h_try) * factor).min(dt_max);
        } else {
            rec.stats.rejected_steps += 1;
            let factor = if err.is_finite() {
                (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2))
            } else {
                T::lit(0.5)
            };
            h = h_try * factor.min(T::lit(0.9));
            if h < dt_min {
                rec.termination = collapse(&rec, &norms, y0_norm, linalg::norm(x0), t, h_try, failed_solve, opts);
                return Ok(rec);
            }
        }
    }
}

/// Classify a step-size collapse at `t`: blow-up when `|x|` grew over the
/// whole recent window and the state or output is far above its initial
/// size; a loss of the output solution when stage solves failed since the
/// last accepted step; otherwise a plain collapse.
#[allow(clippy::too_many_arguments)]
fn collapse<T: Real>(
    rec: &TrajectoryRecord<T>,
    norms: &VecDeque<T>,
    y0_norm: T,
    x0_norm: T,
    t: T,
    h_try: T,
    failed_solve: bool,
    opts: &SimOptions,
) -> Termination {
    let growing = norms.len() > opts.growth_window
        && norms.iter().zip(norms.iter().skip(1)).all(|(a, b)| b >= a)
        && norms.back() > norms.front();
    let gf = T::lit(opts.growth_factor);
    let y_last = rec.y.last().map(|y| linalg::norm(y)).unwrap_or_else(T::zero);
    let x_last = norms.back().copied().unwrap_or_else(T::zero);
    let large = y_last > gf * y0_norm.max(T::one()) || x_last > gf * x0_norm.max(T::one());
    let tf = t.as_f64();
    if growing && large {
        Termination::BlowUp { t: tf }
    } else if failed_solve {
        Termination::NoOutputSolution {
            t: tf,
            bracket: [tf, (t + h_try).as_f64()],
        }
    } else {
        Termination::StepCollapse { t: tf }
    }
}
