//! Closed-form nonlinearities with analytic Jacobians.

use serde::{Deserialize, Serialize};

use super::timefn::TimeFunction;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::scalar::Real;

/// Scalar gain `g(s)` on `s >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Gain {
    /// `g(s) = s`
    Identity,
    /// `g(s) = 1 / sqrt(1 + s^2)`
    InvSqrtOnePlusSq,
    /// `g(s) = value`
    Constant { value: f64 },
}

impl Gain {
    pub fn eval<T: Real>(&self, s: T) -> T {
        match self {
            Gain::Identity => s,
            Gain::InvSqrtOnePlusSq => T::one() / (T::one() + s * s).sqrt(),
            Gain::Constant { value } => T::lit(*value),
        }
    }

    pub fn derivative<T: Real>(&self, s: T) -> T {
        match self {
            Gain::Identity => T::one(),
            Gain::InvSqrtOnePlusSq => {
                let q = T::one() + s * s;
                -s / (q * q.sqrt())
            }
            Gain::Constant { .. } => T::zero(),
        }
    }
}

/// Named nonlinearities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Builtin {
    /// `f = 0` from `R^p` to `R^m`.
    Zero { p: usize, m: usize },
    /// `f(xi) = K xi`.
    Linear { k: Mat<f64> },
    /// `f(t, xi) = xi - g(|xi|) R(theta(t)) xi` on `R^2`.
    RotatedGain { gain: Gain, angle: TimeFunction },
    /// `f(t, xi) = g(|xi|) J(t) xi` with `J(t) = R(theta(t))` when `dim = 2`
    /// and `J = I` otherwise.
    OrthogonalGain {
        gain: Gain,
        #[serde(default)]
        angle: TimeFunction,
        dim: usize,
    },
    /// `f(t, xi) = h(t) xi / (1 + |xi|)`.
    SaturatingRadial { h: TimeFunction, dim: usize },
}

fn rotation<T: Real>(theta: T) -> Mat<T> {
    let (s, c) = theta.sin_cos();
    Mat::from_fn(2, 2, |i, j| [[c, -s], [s, c]][i][j])
}

fn apply_rotation<T: Real>(theta: T, xi: &[T]) -> [T; 2] {
    let (s, c) = theta.sin_cos();
    [c * xi[0] - s * xi[1], s * xi[0] + c * xi[1]]
}

impl Builtin {
    pub fn validate(&self) -> Result<()> {
        match self {
            Builtin::Zero { p, m } if *p == 0 || *m == 0 => {
                Err(Error::Config("zero nonlinearity needs p, m >= 1".into()))
            }
            Builtin::Linear { k } if k.rows() == 0 || k.cols() == 0 || !k.is_finite() => {
                Err(Error::Config("linear gain must be a finite non-empty matrix".into()))
            }
            Builtin::OrthogonalGain { angle, dim, .. } => {
                if *dim == 0 {
                    return Err(Error::Config("orthogonal_gain needs dim >= 1".into()));
                }
                if *dim != 2 && *angle != TimeFunction::constant(0.0) {
                    return Err(Error::Config(
                        "orthogonal_gain supports a rotation angle only for dim = 2".into(),
                    ));
                }
                Ok(())
            }
            Builtin::SaturatingRadial { dim, .. } if *dim == 0 => {
                Err(Error::Config("saturating_radial needs dim >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// `(p, m)` input and output dimensions.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Builtin::Zero { p, m } => (*p, *m),
            Builtin::Linear { k } => (k.cols(), k.rows()),
            Builtin::RotatedGain { .. } => (2, 2),
            Builtin::OrthogonalGain { dim, .. } | Builtin::SaturatingRadial { dim, .. } => {
                (*dim, *dim)
            }
        }
    }

    pub fn is_time_independent(&self) -> bool {
        match self {
            Builtin::Zero { .. } | Builtin::Linear { .. } => true,
            Builtin::RotatedGain { angle, .. } | Builtin::OrthogonalGain { angle, .. } => {
                angle.is_constant()
            }
            Builtin::SaturatingRadial { h, .. } => h.is_constant(),
        }
    }

    pub fn eval<T: Real>(&self, t: T, xi: &[T]) -> Vec<T> {
        match self {
            Builtin::Zero { m, .. } => vec![T::zero(); *m],
            Builtin::Linear { k } => k.cast::<T>().mul_vec(xi),
            Builtin::RotatedGain { gain, angle } => {
                let g = gain.eval(linalg::norm(xi));
                let r = apply_rotation(angle.eval(t), xi);
                vec![xi[0] - g * r[0], xi[1] - g * r[1]]
            }
            Builtin::OrthogonalGain { gain, angle, dim } => {
                let g = gain.eval(linalg::norm(xi));
                if *dim == 2 {
                    let r = apply_rotation(angle.eval(t), xi);
                    vec![g * r[0], g * r[1]]
                } else {
                    xi.iter().map(|&v| g * v).collect()
                }
            }
            Builtin::SaturatingRadial { h, .. } => {
                let c = h.eval::<T>(t) / (T::one() + linalg::norm(xi));
                xi.iter().map(|&v| c * v).collect()
            }
        }
    }

    pub fn jacobian<T: Real>(&self, t: T, xi: &[T]) -> Mat<T> {
        let r = linalg::norm(xi);
        // unit vector, zero at the origin
        let unit: Vec<T> = if r > T::zero() {
            xi.iter().map(|&v| v / r).collect()
        } else {
            vec![T::zero(); xi.len()]
        };
        match self {
            Builtin::Zero { p, m } => Mat::zeros(*m, *p),
            Builtin::Linear { k } => k.cast(),
            Builtin::RotatedGain { gain, angle } => {
                let theta = angle.eval(t);
                let rot = rotation(theta);
                let rxi = apply_rotation(theta, xi);
                let g_part = rot.scale(gain.eval(r));
                let d_part = Mat::outer(&rxi, &unit).scale(gain.derivative(r));
                Mat::identity(2).sub(&g_part).sub(&d_part)
            }
            Builtin::OrthogonalGain { gain, angle, dim } => {
                let j = if *dim == 2 {
                    rotation(angle.eval(t))
                } else {
                    Mat::identity(*dim)
                };
                let jxi = j.mul_vec(xi);
                j.scale(gain.eval(r))
                    .add(&Mat::outer(&jxi, &unit).scale(gain.derivative(r)))
            }
            Builtin::SaturatingRadial { h, dim } => {
                let hv = h.eval::<T>(t);
                let q = T::one() + r;
                Mat::identity(*dim)
                    .scale(hv / q)
                    .sub(&Mat::outer(xi, &unit).scale(hv / (q * q)))
            }
        }
    }
}
