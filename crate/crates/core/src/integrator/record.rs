//! Trajectory records and termination classification.

use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::scalar::Real;

/// Why a simulation stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    ReachedTmax,
    /// Output equation became unsolvable. `t` is the last solvable time and
    /// the event lies in `bracket`.
    NoOutputSolution { t: f64, bracket: [f64; 2] },
    BlowUp { t: f64 },
    StepCollapse { t: f64 },
}

/// Termination without its payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationKind {
    ReachedTmax,
    NoOutputSolution,
    BlowUp,
    StepCollapse,
}

impl Termination {
    pub fn kind(&self) -> TerminationKind {
        match self {
            Termination::ReachedTmax => TerminationKind::ReachedTmax,
            Termination::NoOutputSolution { .. } => TerminationKind::NoOutputSolution,
            Termination::BlowUp { .. } => TerminationKind::BlowUp,
            Termination::StepCollapse { .. } => TerminationKind::StepCollapse,
        }
    }

    /// Stop time for every kind except `ReachedTmax`.
    pub fn time(&self) -> Option<f64> {
        match *self {
            Termination::ReachedTmax => None,
            Termination::NoOutputSolution { t, .. } | Termination::BlowUp { t } | Termination::StepCollapse { t } => Some(t),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub failed_stage_solves: usize,
    /// Accepted samples whose fibre had more than one element.
    pub multiple_fibre_samples: usize,
    /// Size of the last attempted step.
    pub last_dt: f64,
}

/// Sampled trajectory. Row `k` of every per-sample vector belongs to
/// `times[k]`; `branches` is filled only by the inclusion integrator.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord<T> {
    pub times: Vec<T>,
    pub x: Vec<Vec<T>>,
    pub y: Vec<Vec<T>>,
    pub u: Vec<Vec<T>>,
    pub residuals: Vec<T>,
    /// Running trapezoid integral of `|y|`.
    pub y_integral_norm: Vec<T>,
    /// Running trapezoid integral of `|f(t, y)|`.
    pub u_integral_norm: Vec<T>,
    pub branches: Option<Vec<usize>>,
    /// Sample indices where the selected output jumped.
    pub jumps: Vec<usize>,
    pub termination: Termination,
    pub stats: RunStats,
}

/// JSON-friendly digest of a record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub termination: Termination,
    pub t_end: Option<f64>,
    pub samples: usize,
    pub y_integral_norm: f64,
    pub u_integral_norm: f64,
    pub max_residual: f64,
    pub final_state_norm: Option<f64>,
    pub jumps: usize,
    pub stats: RunStats,
}

impl<T: Real> TrajectoryRecord<T> {
    pub(crate) fn new(with_branches: bool) -> Self {
        Self {
            times: Vec::new(),
            x: Vec::new(),
            y: Vec::new(),
            u: Vec::new(),
            residuals: Vec::new(),
            y_integral_norm: Vec::new(),
            u_integral_norm: Vec::new(),
            branches: with_branches.then(Vec::new),
            jumps: Vec::new(),
            termination: Termination::ReachedTmax,
            stats: RunStats::default(),
        }
    }

    pub(crate) fn push(&mut self, t: T, x: Vec<T>, y: Vec<T>, u: Vec<T>, residual: T) {
        let half = T::lit(0.5);
        let (iy, iu) = match self.times.last() {
            Some(&t_prev) => {
                let k = self.times.len() - 1;
                let h = t - t_prev;
                (
                    self.y_integral_norm[k] + half * h * (linalg::norm(&self.y[k]) + linalg::norm(&y)),
                    self.u_integral_norm[k] + half * h * (linalg::norm(&self.u[k]) + linalg::norm(&u)),
                )
            }
            None => (T::zero(), T::zero()),
        };
        self.times.push(t);
        self.x.push(x);
        self.y.push(y);
        self.u.push(u);
        self.residuals.push(residual);
        self.y_integral_norm.push(iy);
        self.u_integral_norm.push(iu);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_time(&self) -> Option<T> {
        self.times.last().copied()
    }

    pub fn final_y_integral(&self) -> T {
        self.y_integral_norm.last().copied().unwrap_or_else(T::zero)
    }

    pub fn final_u_integral(&self) -> T {
        self.u_integral_norm.last().copied().unwrap_or_else(T::zero)
    }

    pub fn max_residual(&self) -> T {
        self.residuals.iter().copied().fold(T::zero(), T::max)
    }

    /// Linear interpolation of the state at `t` inside the recorded span.
    pub fn state_at(&self, t: T) -> Option<Vec<T>> {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return None;
        }
        if k == self.times.len() {
            return (self.times[k - 1] == t).then(|| self.x[k - 1].clone());
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let s = (t - t0) / (t1 - t0);
        Some(
            self.x[k - 1]
                .iter()
                .zip(&self.x[k])
                .map(|(&a, &b)| a + s * (b - a))
                .collect(),
        )
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            termination: self.termination.clone(),
            t_end: self.last_time().map(Real::as_f64),
            samples: self.len(),
            y_integral_norm: self.final_y_integral().as_f64(),
            u_integral_norm: self.final_u_integral().as_f64(),
            max_residual: self.max_residual().as_f64(),
            final_state_norm: self.x.last().map(|x| linalg::norm(x).as_f64()),
            jumps: self.jumps.len(),
            stats: self.stats.clone(),
        }
    }
}
