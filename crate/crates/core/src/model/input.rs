use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Exogenous input `v(t)`. Every representation is bounded on bounded
/// intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSignal {
    Zero { dim: usize },
    Constant { value: Vec<f64> },
    /// Value `values[k]` on `[times[k], times[k+1])`; the last value holds
    /// forever and the first one also applies before `times[0]`.
    PiecewiseConstant { times: Vec<f64>, values: Vec<Vec<f64>> },
    /// One coefficient list per component, ascending powers of `t`.
    Polynomial { coefficients: Vec<Vec<f64>> },
}

impl InputSignal {
    pub fn zero(dim: usize) -> Self {
        InputSignal::Zero { dim }
    }

    pub fn dim(&self) -> usize {
        match self {
            InputSignal::Zero { dim } => *dim,
            InputSignal::Constant { value } => value.len(),
            InputSignal::PiecewiseConstant { values, .. } => values.first().map_or(0, Vec::len),
            InputSignal::Polynomial { coefficients } => coefficients.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            InputSignal::Zero { .. } => Ok(()),
            InputSignal::Constant { value } => {
                if finite(value) {
                    Ok(())
                } else {
                    Err(Error::Config("input value must be finite".into()))
                }
            }
            InputSignal::PiecewiseConstant { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(Error::dim("input.values", times.len(), values.len()));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config("input.times must be strictly increasing".into()));
                }
                let d = values[0].len();
                for (k, v) in values.iter().enumerate() {
                    if v.len() != d {
                        return Err(Error::dim(&format!("input.values[{k}]"), d, v.len()));
                    }
                    if !finite(v) {
                        return Err(Error::Config("input values must be finite".into()));
                    }
                }
                Ok(())
            }
            InputSignal::Polynomial { coefficients } => {
                if coefficients.iter().all(|c| finite(c)) {
                    Ok(())
                } else {
                    Err(Error::Config("input coefficients must be finite".into()))
                }
            }
        }
    }

    pub fn eval<T: Real>(&self, t: T) -> Vec<T> {
        match self {
            InputSignal::Zero { dim } => vec![T::zero(); *dim],
            InputSignal::Constant { value } => value.iter().map(|&x| T::lit(x)).collect(),
            InputSignal::PiecewiseConstant { times, values } => {
                let tf = t.as_f64();
                let k = times.partition_point(|&s| s <= tf).saturating_sub(1);
                values[k].iter().map(|&x| T::lit(x)).collect()
            }
            InputSignal::Polynomial { coefficients } => coefficients
                .iter()
                .map(|c| c.iter().rev().fold(T::zero(), |acc, &a| acc * t + T::lit(a)))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn representations_evaluate() {
        assert_eq!(InputSignal::zero(2).eval(3.0f64), vec![0.0, 0.0]);
        let p = InputSignal::Polynomial {
            coefficients: vec![vec![1.0, 0.0, 2.0]],
        };
        assert_eq!(p.eval(3.0f64), vec![19.0]);
        let pc = InputSignal::PiecewiseConstant {
            times: vec![0.0, 1.0],
            values: vec![vec![1.0], vec![-1.0]],
        };
        assert!(pc.validate().is_ok());
        assert_eq!(pc.eval(0.5f64), vec![1.0]);
        assert_eq!(pc.eval(1.0f64), vec![-1.0]);
        assert_eq!(pc.eval(-1.0f64), vec![1.0]);
    }

    #[test]
    fn piecewise_constant_rejects_unsorted_times() {
        let pc = InputSignal::PiecewiseConstant {
            times: vec![1.0, 0.0],
            values: vec![vec![1.0], vec![2.0]],
        };
        assert!(pc.validate().is_err());
    }
}
