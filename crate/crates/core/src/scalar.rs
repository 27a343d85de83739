//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the solvers are generic over (`f32` or `f64`).
///
/// Exact/rational scalars are not supported: the model needs `atan`, `sqrt`
/// and `exp`, which have no exact counterpart.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal or parameter.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    /// Lossy conversion to `f64`, used for reports and serialization.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }

    /// Tolerance floor: `max(x, factor * epsilon)`, so `f32` callers get
    /// attainable defaults.
    #[inline]
    fn tol_floor(x: f64, factor: f64) -> Self {
        let eps = Self::epsilon().as_f64();
        Self::lit(x.max(factor * eps))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Convert a slice of `f64` into `T`.
pub fn vec_from_f64<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

/// Convert a slice of `T` into `f64`.
pub fn vec_to_f64<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}
