//! Comparison of a record against closed-form solutions.

use serde::{Deserialize, Serialize};

use super::record::TrajectoryRecord;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sup-norm deviations over the recorded grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub max_x_error: f64,
    pub max_y_error: f64,
    pub x_component_errors: Vec<f64>,
    pub y_component_errors: Vec<f64>,
    /// Time at which the state error peaks.
    pub worst_time: f64,
    pub samples: usize,
}

/// Compare the samples inside the closed interval `domain` with
/// `reference(t) = (x(t), y(t))`; samples outside it are ignored.
pub fn compare_to_reference<T: Real>(
    record: &TrajectoryRecord<T>,
    domain: [f64; 2],
    reference: &dyn Fn(f64) -> (Vec<f64>, Vec<f64>),
) -> Result<ErrorMetrics> {
    let inside: Vec<usize> = (0..record.len())
        .filter(|&k| {
            let t = record.times[k].as_f64();
            t >= domain[0] && t <= domain[1]
        })
        .collect();
    let Some(&first) = inside.first() else {
        return Err(Error::Usage(format!(
            "record has no samples in the reference domain [{}, {}]",
            domain[0], domain[1]
        )));
    };
    let (n, p) = (record.x[0].len(), record.y[0].len());
    let mut ex = vec![0.0f64; n];
    let mut ey = vec![0.0f64; p];
    let mut worst = (0.0f64, record.times[first].as_f64());
    for &k in &inside {
        let t = record.times[k].as_f64();
        let (xr, yr) = reference(t);
        if xr.len() != n || yr.len() != p {
            return Err(Error::Usage(format!(
                "reference returns ({}, {}) components, record has ({n}, {p})",
                xr.len(),
                yr.len()
            )));
        }
        let mut ek = 0.0f64;
        for (i, (&a, b)) in record.x[k].iter().zip(&xr).enumerate() {
            let e = (a.as_f64() - b).abs();
            ex[i] = ex[i].max(e);
            ek = ek.max(e);
        }
        for (i, (&a, b)) in record.y[k].iter().zip(&yr).enumerate() {
            ey[i] = ey[i].max((a.as_f64() - b).abs());
        }
        if ek > worst.0 {
            worst = (ek, t);
        }
    }
    Ok(ErrorMetrics {
        max_x_error: ex.iter().copied().fold(0.0, f64::max),
        max_y_error: ey.iter().copied().fold(0.0, f64::max),
        x_component_errors: ex,
        y_component_errors: ey,
        worst_time: worst.1,
        samples: inside.len(),
    })
}
