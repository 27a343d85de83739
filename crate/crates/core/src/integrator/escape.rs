//! Escape-time refinement after a no-solution or blow-up stop.

use serde::{Deserialize, Serialize};

use super::record::{Termination, TrajectoryRecord};
use super::rk::{dp45_step, error_norm, NearestOutput, Plant, Sample};
use super::simulate::SimOptions;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::LureSystem;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeEstimate {
    pub t: f64,
    pub half_width: f64,
}

const MAX_ATTEMPTS: usize = 200_000;

/// Locate the end of the maximal interval by stepping from the last recorded
/// sample with Dormand-Prince steps, halving the step whenever a stage has no
/// output, the state leaves the blow-up threshold or the local error is too
/// large. Stops once the step is below `opts.time_tol`; the event then lies
/// in `[t, t + 2h]`.
pub fn refine_escape_time<T: Real>(record: &TrajectoryRecord<T>, sys: &LureSystem, opts: &SimOptions) -> Result<EscapeEstimate> {
    if matches!(record.termination, Termination::ReachedTmax) {
        return Err(Error::Usage(
            "escape-time refinement needs a record that stopped early".into(),
        ));
    }
    let (Some(&t_last), Some(x_last), Some(y_last), Some(u_last)) =
        (record.times.last(), record.x.last(), record.y.last(), record.u.last())
    else {
        let t = record.termination.time().unwrap_or(0.0);
        return Ok(EscapeEstimate { t, half_width: 0.0 });
    };
    opts.validate()?;
    let plant = Plant::new(sys);
    let mut rule = NearestOutput {
        opts: opts.solver.clone(),
    };
    let mut t = t_last;
    let mut x = x_last.clone();
    let mut cur = Sample {
        y: y_last.clone(),
        u: u_last.clone(),
        residual: T::zero(),
        multiple: false,
        branch: 0,
    };
    let tol = T::lit(opts.time_tol);
    let thr = T::lit(opts.blowup_threshold);
    let mut h = T::lit(if record.stats.last_dt > 0.0 { record.stats.last_dt } else { opts.dt });
    let mut attempts = 0;
    while h > tol && attempts < MAX_ATTEMPTS {
        attempts += 1;
        let accepted = dp45_step(&plant, &mut rule, t, &x, &cur, h)?.filter(|st| {
            linalg::all_finite(&st.x)
                && linalg::all_finite(&st.error)
                && linalg::norm(&st.x) <= thr
                && error_norm(&st.error, &x, &st.x, opts.atol, opts.rtol) <= T::one()
        });
        match accepted {
            Some(st) => {
                t += h;
                x = st.x;
                cur = st.sample;
            }
            None => h *= T::lit(0.5),
        }
    }
    Ok(EscapeEstimate {
        t: (t + h).as_f64(),
        half_width: h.as_f64(),
    })
}
