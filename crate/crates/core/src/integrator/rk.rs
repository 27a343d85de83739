//! Runge-Kutta steps with the output equation solved at every stage.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::{InputSignal, LureSystem, Nonlinearity, SystemMatrices};
use crate::output::{solve_output, SolveOptions, SolveStatus};
use crate::scalar::Real;

/// The system with matrices cast to the working scalar.
pub(crate) struct Plant<'a, T> {
    pub m: SystemMatrices<T>,
    pub f: &'a Nonlinearity,
    pub v: &'a InputSignal,
}

impl<'a, T: Real> Plant<'a, T> {
    pub fn new(sys: &'a LureSystem) -> Self {
        Self {
            m: sys.matrices.cast(),
            f: &sys.nonlinearity,
            v: &sys.input,
        }
    }

    pub fn d(&self) -> &Mat<T> {
        self.m.d()
    }

    /// `C x + D_e v(t)`
    pub fn target(&self, t: T, x: &[T]) -> Vec<T> {
        self.m.output_target(x, &self.v.eval(t))
    }

    pub fn rhs(&self, t: T, x: &[T], u: &[T]) -> Vec<T> {
        self.m.state_rhs(x, u, &self.v.eval(t))
    }

    /// `|y - D f(t, y) - C x - D_e v(t)|`
    pub fn residual(&self, t: T, x: &[T], y: &[T], u: &[T]) -> T {
        let du = self.d().mul_vec(u);
        let w = self.target(t, x);
        let r: Vec<T> = y.iter().zip(&du).zip(&w).map(|((&a, &b), &c)| a - b - c).collect();
        linalg::norm(&r)
    }

    /// Whether a residual is acceptable for an output of this size; the
    /// floor grows with `|y|` because `y - D f(y)` cancels for large `y`.
    pub fn residual_ok(&self, residual: T, y: &[T], u: &[T], tol: T) -> bool {
        let scale = T::one().max(linalg::norm(y)).max(linalg::norm(&self.d().mul_vec(u)));
        residual <= tol * scale
    }
}

/// Output `y` at one stage together with `u = f(t, y)`.
#[derive(Clone, Debug)]
pub(crate) struct Sample<T> {
    pub y: Vec<T>,
    pub u: Vec<T>,
    pub residual: T,
    pub multiple: bool,
    pub branch: usize,
}

/// Strategy producing the output at a stage; `Ok(None)` means no admissible
/// output exists there.
pub(crate) trait OutputRule<T: Real> {
    fn output(&mut self, plant: &Plant<'_, T>, t: T, x: &[T], prev: &[T]) -> Result<Option<Sample<T>>>;
}

/// Solve the output equation warm-started at the previous output; among
/// several solutions the nearest one is kept.
pub(crate) struct NearestOutput {
    pub opts: SolveOptions,
}

impl<T: Real> OutputRule<T> for NearestOutput {
    fn output(&mut self, plant: &Plant<'_, T>, t: T, x: &[T], prev: &[T]) -> Result<Option<Sample<T>>> {
        if !linalg::all_finite(x) {
            return Ok(None);
        }
        let w = plant.target(t, x);
        let sol = match solve_output(plant.d(), plant.f, t, &w, prev, &self.opts) {
            Ok(s) => s,
            Err(Error::Evaluation { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        if !sol.is_solved() {
            return Ok(None);
        }
        let multiple = sol.status == SolveStatus::Multiple;
        let Some(y) = sol.y else {
            return Ok(None);
        };
        let u = plant.f.eval(t, &y);
        if !linalg::all_finite(&u) {
            return Ok(None);
        }
        let residual = plant.residual(t, x, &y, &u);
        if !plant.residual_ok(residual, &y, &u, self.opts.tol::<T>()) {
            return Ok(None);
        }
        Ok(Some(Sample {
            y,
            u,
            residual,
            multiple,
            branch: 0,
        }))
    }
}

fn lin_comb<T: Real>(x: &[T], h: T, terms: &[(f64, &[T])]) -> Vec<T> {
    let mut out = x.to_vec();
    for &(c, k) in terms {
        if c != 0.0 {
            let hc = h * T::lit(c);
            for (o, &ki) in out.iter_mut().zip(k) {
                *o += hc * ki;
            }
        }
    }
    out
}

/// One classical RK4 step from `(t, x)` with output `cur`. Returns the new
/// state and its output, or `None` when some stage has no output.
pub(crate) fn rk4_step<T: Real, R: OutputRule<T>>(
    plant: &Plant<'_, T>,
    rule: &mut R,
    t: T,
    x: &[T],
    cur: &Sample<T>,
    h: T,
) -> Result<Option<(Vec<T>, Sample<T>)>> {
    let half = T::lit(0.5);
    let k1 = plant.rhs(t, x, &cur.u);
    let x2 = lin_comb(x, h, &[(0.5, &k1)]);
    let Some(s2) = rule.output(plant, t + half * h, &x2, &cur.y)? else {
        return Ok(None);
    };
    let k2 = plant.rhs(t + half * h, &x2, &s2.u);
    let x3 = lin_comb(x, h, &[(0.5, &k2)]);
    let Some(s3) = rule.output(plant, t + half * h, &x3, &s2.y)? else {
        return Ok(None);
    };
    let k3 = plant.rhs(t + half * h, &x3, &s3.u);
    let x4 = lin_comb(x, h, &[(1.0, &k3)]);
    let Some(s4) = rule.output(plant, t + h, &x4, &s3.y)? else {
        return Ok(None);
    };
    let k4 = plant.rhs(t + h, &x4, &s4.u);
    let x_new = lin_comb(x, h, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)]);
    Ok(rule.output(plant, t + h, &x_new, &cur.y)?.map(|s| (x_new, s)))
}

const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const DP_E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

pub(crate) struct Dp45Step<T> {
    pub x: Vec<T>,
    pub sample: Sample<T>,
    /// Local error estimate, componentwise.
    pub error: Vec<T>,
}

/// One Dormand-Prince 5(4) step. The seventh stage sits at the new state, so
/// its output is the output of the accepted point.
pub(crate) fn dp45_step<T: Real, R: OutputRule<T>>(
    plant: &Plant<'_, T>,
    rule: &mut R,
    t: T,
    x: &[T],
    cur: &Sample<T>,
    h: T,
) -> Result<Option<Dp45Step<T>>> {
    let mut ks: Vec<Vec<T>> = vec![plant.rhs(t, x, &cur.u)];
    let mut prev_y = cur.y.clone();
    let mut last: Option<(Vec<T>, Sample<T>)> = None;
    for i in 1..7 {
        let terms: Vec<(f64, &[T])> = ks.iter().enumerate().map(|(j, k)| (DP_A[i][j], k.as_slice())).collect();
        let xi = lin_comb(x, h, &terms);
        let ti = t + T::lit(DP_C[i]) * h;
        let Some(s) = rule.output(plant, ti, &xi, &prev_y)? else {
            return Ok(None);
        };
        ks.push(plant.rhs(ti, &xi, &s.u));
        prev_y = s.y.clone();
        last = Some((xi, s));
    }
    let (x_new, sample) = last.expect("seven stages");
    let mut error = vec![T::zero(); x.len()];
    for (e, k) in DP_E.iter().zip(&ks) {
        for (ei, &ki) in error.iter_mut().zip(k) {
            *ei += h * T::lit(*e) * ki;
        }
    }
    Ok(Some(Dp45Step { x: x_new, sample, error }))
}

/// Scaled RMS norm of a local error estimate.
pub(crate) fn error_norm<T: Real>(err: &[T], x: &[T], x_new: &[T], atol: f64, rtol: f64) -> T {
    let n = T::lit(err.len().max(1) as f64);
    let sum: T = err
        .iter()
        .zip(x.iter().zip(x_new))
        .map(|(&e, (&a, &b))| {
            let sc = T::lit(atol) + T::lit(rtol) * a.abs().max(b.abs());
            (e / sc) * (e / sc)
        })
        .sum();
    (sum / n).sqrt()
}
