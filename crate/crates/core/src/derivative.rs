//! The map `F_t`, finite-difference Jacobians and sampled Clarke Jacobians.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::{Nonlinearity, SystemMatrices};
use crate::sampling;
use crate::scalar::{vec_to_f64, Real};

/// `F(t, xi) = xi - D f(t, xi)`.
pub fn eval_f_map<T: Real>(sys: &SystemMatrices<T>, f: &Nonlinearity, t: T, xi: &[T]) -> Result<Vec<T>> {
    let p = sys.dims().p;
    if xi.len() != p {
        return Err(Error::dim("xi", p, xi.len()));
    }
    let fx = f.try_eval(t, xi)?;
    Ok(linalg::sub(xi, &sys.d().mul_vec(&fx)))
}

/// Unchecked `F_t` for inner loops; dimensions must already agree.
pub(crate) fn f_map_unchecked<T: Real>(d: &Mat<T>, f: &Nonlinearity, t: T, xi: &[T]) -> Vec<T> {
    let fx = f.eval(t, xi);
    linalg::sub(xi, &d.mul_vec(&fx))
}

/// Default central-difference step `1e-6 * max(1, |xi|)`, raised to
/// `cbrt(eps)` scale for single precision.
pub fn default_fd_step<T: Real>(xi: &[T]) -> T {
    let base = T::lit(1e-6).max(T::epsilon().cbrt());
    base * linalg::norm(xi).max(T::one())
}

/// Central-difference Jacobian of `f(t, .)` at `xi`, column by column.
pub fn finite_diff_jacobian<T: Real>(f: &Nonlinearity, t: T, xi: &[T], h: T) -> Result<Mat<T>> {
    if !(h > T::zero()) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {h}")));
    }
    if !linalg::all_finite(xi) {
        return Err(Error::Evaluation {
            t: t.as_f64(),
            point: vec_to_f64(xi),
        });
    }
    let p = xi.len();
    let mut jac = Mat::zeros(f.m(), p);
    let mut probe = xi.to_vec();
    let two_h = h + h;
    for j in 0..p {
        probe[j] = xi[j] + h;
        let fp = f.try_eval(t, &probe)?;
        probe[j] = xi[j] - h;
        let fm = f.try_eval(t, &probe)?;
        probe[j] = xi[j];
        let col: Vec<T> = fp.iter().zip(&fm).map(|(&a, &b)| (a - b) / two_h).collect();
        jac.set_col(j, &col);
    }
    Ok(jac)
}

/// Jacobian of `F_t = I - D f_t` from a Jacobian of `f_t`.
pub fn f_map_jacobian<T: Real>(d: &Mat<T>, jf: &Mat<T>) -> Mat<T> {
    Mat::identity(d.rows()).sub(&d.mul(jf))
}

/// Finite-difference Jacobians at points drawn uniformly from a ball; a
/// statistical stand-in for the generators of the Clarke Jacobian.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianSample<T> {
    pub matrices: Vec<Mat<T>>,
    /// Sample points, aligned with `matrices`.
    pub points: Vec<Vec<T>>,
    pub t: T,
    pub base_point: Vec<T>,
    pub radius: T,
    pub step: T,
    pub seed: u64,
}

pub const DEFAULT_CLARKE_RADIUS: f64 = 1e-4;
pub const DEFAULT_CLARKE_SAMPLES: usize = 32;

/// Sample `n_samples` points uniformly in `B(xi, radius)` (seeded) and take
/// the central-difference Jacobian at each with step `radius / 100`.
pub fn sample_clarke_jacobian<T: Real>(
    f: &Nonlinearity,
    t: T,
    xi: &[T],
    radius: T,
    n_samples: usize,
    seed: u64,
) -> Result<JacobianSample<T>> {
    if !(radius > T::zero()) {
        return Err(Error::Config(format!("sampling radius must be positive, got {radius}")));
    }
    if n_samples == 0 {
        return Err(Error::Config("n_samples must be at least 1".into()));
    }
    let step = radius / T::lit(100.0);
    let mut rng = sampling::rng(seed);
    let center = vec_to_f64(xi);
    let mut matrices = Vec::with_capacity(n_samples);
    let mut points = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let q: Vec<T> = sampling::uniform_ball(&mut rng, &center, radius.as_f64())
            .into_iter()
            .map(T::lit)
            .collect();
        matrices.push(finite_diff_jacobian(f, t, &q, step)?);
        points.push(q);
    }
    Ok(JacobianSample {
        matrices,
        points,
        t,
        base_point: xi.to_vec(),
        radius,
        step,
        seed,
    })
}
