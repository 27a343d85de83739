use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Scalar function of time used to modulate nonlinearity parameters
/// (deadzone width, gain, rotation angle).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeFunction {
    Constant { value: f64 },
    /// `offset + slope * t`
    Affine { offset: f64, slope: f64 },
    /// `clamp(offset + slope * t, min, max)`
    ClampedAffine {
        offset: f64,
        slope: f64,
        min: f64,
        max: f64,
    },
}

impl Default for TimeFunction {
    fn default() -> Self {
        TimeFunction::Constant { value: 0.0 }
    }
}

impl TimeFunction {
    pub fn constant(value: f64) -> Self {
        TimeFunction::Constant { value }
    }

    pub fn eval<T: Real>(&self, t: T) -> T {
        match *self {
            TimeFunction::Constant { value } => T::lit(value),
            TimeFunction::Affine { offset, slope } => T::lit(offset) + T::lit(slope) * t,
            TimeFunction::ClampedAffine {
                offset,
                slope,
                min,
                max,
            } => (T::lit(offset) + T::lit(slope) * t).max(T::lit(min)).min(T::lit(max)),
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            TimeFunction::Constant { .. } => true,
            TimeFunction::Affine { slope, .. } | TimeFunction::ClampedAffine { slope, .. } => {
                slope == 0.0
            }
        }
    }
}
