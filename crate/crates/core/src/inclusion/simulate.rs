//! Integration of the differential inclusion through a selection policy.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::policy::{select_from_fibre, SelectionPolicy};
use crate::error::{Error, Result};
use crate::integrator::rk::{OutputRule, Plant, Sample};
use crate::integrator::simulate::{check_start, initial_guess, integrate, record_sample};
use crate::integrator::{SimOptions, Termination, TrajectoryRecord};
use crate::linalg::{self, Mat};
use crate::model::{LureSystem, Nonlinearity};
use crate::output::{enumerate_fibre_exact, enumerate_fibre_multistart, solve_output, supports_exact, FibreSet, SolveOptions};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InclusionMethod {
    ForwardEuler,
    /// Implicit Euler: the step is itself a fibre problem for a modified
    /// feedthrough, so the selected output is consistent with the new state.
    #[default]
    BackwardEuler,
    /// The explicit Runge-Kutta scheme of `SimOptions::method`, selecting at
    /// every stage.
    RungeKutta,
}

impl FromStr for InclusionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" | "forward_euler" => Ok(InclusionMethod::ForwardEuler),
            "backward_euler" | "implicit_euler" => Ok(InclusionMethod::BackwardEuler),
            "rk" | "rk4" | "runge_kutta" => Ok(InclusionMethod::RungeKutta),
            _ => Err(Error::Config(format!("unknown inclusion method '{s}'"))),
        }
    }
}

/// How fibres are computed when no exact structure is available.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FibreMode {
    /// Warm-started solve; the fibre is whatever the solver's fallback found.
    #[default]
    Local,
    /// Full multistart enumeration at every stage.
    Multistart,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InclusionOptions {
    pub method: InclusionMethod,
    pub fibre_mode: FibreMode,
    /// Policy after the initial sample; `None` keeps the initial policy.
    pub continuation: Option<SelectionPolicy>,
    /// Output changes above `max(jump_lipschitz * dt, jump_floor)` between
    /// consecutive samples are flagged as jumps.
    pub jump_lipschitz: f64,
    pub jump_floor: f64,
    pub sim: SimOptions,
}

impl Default for InclusionOptions {
    fn default() -> Self {
        Self {
            method: InclusionMethod::BackwardEuler,
            fibre_mode: FibreMode::Local,
            continuation: None,
            jump_lipschitz: 100.0,
            jump_floor: 1e-6,
            sim: SimOptions::default(),
        }
    }
}

/// Fibre of `xi - d f(t, xi) = w`: exact when the structure allows it,
/// otherwise numeric according to `mode`.
pub fn compute_fibre<T: Real>(
    d: &Mat<T>,
    f: &Nonlinearity,
    t: T,
    w: &[T],
    guess: &[T],
    mode: FibreMode,
    opts: &SolveOptions,
) -> Result<FibreSet<T>> {
    if opts.use_exact && supports_exact(d, f) {
        return enumerate_fibre_exact(d, f, t, w);
    }
    match mode {
        FibreMode::Multistart => enumerate_fibre_multistart(d, f, t, w, opts),
        FibreMode::Local => {
            let sol = solve_output(d, f, t, w, guess, opts)?;
            Ok(match (sol.fibre, sol.y) {
                (Some(fib), _) => fib,
                (None, Some(y)) => FibreSet::single(y, false),
                (None, None) => FibreSet::empty(false),
            })
        }
    }
}

struct PolicyOutput<'p> {
    initial: &'p SelectionPolicy,
    continuation: &'p SelectionPolicy,
    started: bool,
    mode: FibreMode,
    opts: SolveOptions,
}

impl PolicyOutput<'_> {
    fn policy(&self) -> &SelectionPolicy {
        if self.started {
            self.continuation
        } else {
            self.initial
        }
    }
}

/// Select from the fibre of `(d, w)` and build the sample; the residual is
/// evaluated on the original output equation at state `x`.
#[allow(clippy::too_many_arguments)]
fn select_sample<T: Real>(
    plant: &Plant<'_, T>,
    d: &Mat<T>,
    w: &[T],
    t: T,
    x_of: impl FnOnce(&[T]) -> Vec<T>,
    prev: &[T],
    policy: &SelectionPolicy,
    mode: FibreMode,
    opts: &SolveOptions,
) -> Result<Option<(Vec<T>, Sample<T>)>> {
    let fib = match compute_fibre(d, plant.f, t, w, prev, mode, opts) {
        Ok(f) => f,
        Err(Error::Evaluation { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let Some(sel) = select_from_fibre(&fib, policy, Some(prev))? else {
        return Ok(None);
    };
    let u = plant.f.eval(t, &sel.y);
    if !linalg::all_finite(&u) {
        return Ok(None);
    }
    let x = x_of(&u);
    if !linalg::all_finite(&x) {
        return Ok(None);
    }
    let residual = plant.residual(t, &x, &sel.y, &u);
    if !plant.residual_ok(residual, &sel.y, &u, opts.tol::<T>()) {
        return Ok(None);
    }
    let multiple = fib.element_count() > 1;
    Ok(Some((
        x,
        Sample {
            y: sel.y,
            u,
            residual,
            multiple,
            branch: sel.branch,
        },
    )))
}

impl<T: Real> OutputRule<T> for PolicyOutput<'_> {
    fn output(&mut self, plant: &Plant<'_, T>, t: T, x: &[T], prev: &[T]) -> Result<Option<Sample<T>>> {
        if !linalg::all_finite(x) {
            return Ok(None);
        }
        let w = plant.target(t, x);
        let policy = self.policy().clone();
        let out = select_sample(plant, plant.d(), &w, t, |_| x.to_vec(), prev, &policy, self.mode, &self.opts)?;
        self.started = true;
        Ok(out.map(|(_, s)| s))
    }
}

/// Integrate `x' in A x + B f(t, F_t^{-1}(C x + D_e v)) + B_e v` choosing the
/// output by `policy`. Branch indices and jump flags are recorded.
pub fn simulate_inclusion<T: Real>(
    sys: &LureSystem,
    t0: T,
    x0: &[T],
    policy: &SelectionPolicy,
    opts: &InclusionOptions,
) -> Result<TrajectoryRecord<T>> {
    check_start(sys, t0, x0, &opts.sim)?;
    policy.validate()?;
    if let Some(c) = &opts.continuation {
        c.validate()?;
    }
    let plant = Plant::new(sys);
    let guess = initial_guess(&plant, t0, x0);
    let mut rule = PolicyOutput {
        initial: policy,
        continuation: opts.continuation.as_ref().unwrap_or(policy),
        started: false,
        mode: opts.fibre_mode,
        opts: opts.sim.solver.clone(),
    };
    let mut rec = match opts.method {
        InclusionMethod::RungeKutta => integrate(&plant, &mut rule, t0, x0, &guess, &opts.sim, TrajectoryRecord::new(true))?,
        InclusionMethod::ForwardEuler | InclusionMethod::BackwardEuler => euler(&plant, &mut rule, t0, x0, &guess, opts)?,
    };
    flag_jumps(&mut rec, opts);
    Ok(rec)
}

fn flag_jumps<T: Real>(rec: &mut TrajectoryRecord<T>, opts: &InclusionOptions) {
    rec.jumps = (1..rec.len())
        .filter(|&k| {
            let dt = (rec.times[k] - rec.times[k - 1]).as_f64();
            let bound = (opts.jump_lipschitz * dt).max(opts.jump_floor);
            linalg::dist(&rec.y[k], &rec.y[k - 1]).as_f64() > bound
        })
        .collect();
}

fn euler<T: Real>(
    plant: &Plant<'_, T>,
    rule: &mut PolicyOutput<'_>,
    t0: T,
    x0: &[T],
    guess: &[T],
    opts: &InclusionOptions,
) -> Result<TrajectoryRecord<T>> {
    let mut rec = TrajectoryRecord::new(true);
    let Some(first) = rule.output(plant, t0, x0, guess)? else {
        let t = t0.as_f64();
        rec.termination = Termination::NoOutputSolution { t, bracket: [t, t] };
        return Ok(rec);
    };
    record_sample(&mut rec, t0, x0.to_vec(), &first);
    let sim = &opts.sim;
    let dt = T::lit(sim.dt);
    let tmax = T::lit(sim.tmax);
    let n_steps = ((tmax - t0) / dt - T::lit(1e-9)).ceil().max(T::zero()).to_usize().unwrap_or(0);
    let (mut t, mut x, mut cur) = (t0, x0.to_vec(), first);
    let m = &plant.m;
    let n = m.dims().n;
    let mut cached: Option<(T, Mat<T>, Mat<T>)> = None;
    rec.stats.last_dt = sim.dt;
    for k in 0..n_steps {
        let t_next = if k + 1 == n_steps { tmax } else { t0 + T::lit((k + 1) as f64) * dt };
        let h = t_next - t;
        rec.stats.last_dt = h.as_f64();
        let step = match opts.method {
            InclusionMethod::ForwardEuler => {
                let dx = plant.rhs(t, &x, &cur.u);
                let x_new = linalg::axpy(&x, h, &dx);
                rule.output(plant, t_next, &x_new, &cur.y)?.map(|s| (x_new, s))
            }
            _ => {
                // x' = M (x + h B u' + h B_e v'),  M = (I - h A)^{-1};
                // y' then solves y - D_eff f(y) = w~ with
                // D_eff = D + h C M B and w~ = C M (x + h B_e v') + D_e v'.
                if cached.as_ref().is_none_or(|(hc, _, _)| *hc != h) {
                    let mi = Mat::identity(n)
                        .sub(&m.a().scale(h))
                        .inverse()
                        .ok_or_else(|| Error::Config(format!("I - dt A is singular for dt = {h}")))?;
                    let d_eff = m.d().add(&m.c().mul(&mi).mul(m.b()).scale(h));
                    cached = Some((h, mi, d_eff));
                }
                let (_, mi, d_eff) = cached.as_ref().expect("cached above");
                let v = plant.v.eval(t_next);
                let base = linalg::axpy(&x, h, &m.be().mul_vec(&v));
                let w = linalg::add(&m.c().mul_vec(&mi.mul_vec(&base)), &m.de().mul_vec(&v));
                let policy = rule.policy().clone();
                let x_of = |u: &[T]| mi.mul_vec(&linalg::axpy(&base, h, &m.b().mul_vec(u)));
                select_sample(plant, d_eff, &w, t_next, x_of, &cur.y, &policy, rule.mode, &rule.opts)?
            }
        };
        let Some((x_new, s)) = step else {
            rec.stats.failed_stage_solves += 1;
            rec.termination = Termination::NoOutputSolution {
                t: t.as_f64(),
                bracket: [t.as_f64(), t_next.as_f64()],
            };
            return Ok(rec);
        };
        rec.stats.accepted_steps += 1;
        let big = linalg::norm(&x_new).as_f64() > sim.blowup_threshold;
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
