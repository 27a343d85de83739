//! Symbolic piecewise-scalar nonlinearities.
//!
//! A piecewise description keeps the formula of every piece, so the output
//! equation `xi - d * phi(t, xi) = w` can be solved piece by piece in closed
//! form. Coefficients and breakpoints may depend on time through a single
//! modulator `s(t)`: every [`Coef`] evaluates to `base + slope * s(t)`.

use serde::{Deserialize, Serialize};

use super::timefn::TimeFunction;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Coefficient `base + slope * s(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "CoefRepr", into = "CoefRepr")]
pub struct Coef {
    pub base: f64,
    pub slope: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoefRepr {
    Plain(f64),
    Modulated {
        base: f64,
        #[serde(default)]
        slope: f64,
    },
}

impl From<CoefRepr> for Coef {
    fn from(r: CoefRepr) -> Self {
        match r {
            CoefRepr::Plain(base) => Coef { base, slope: 0.0 },
            CoefRepr::Modulated { base, slope } => Coef { base, slope },
        }
    }
}

impl From<Coef> for CoefRepr {
    fn from(c: Coef) -> Self {
        if c.slope == 0.0 {
            CoefRepr::Plain(c.base)
        } else {
            CoefRepr::Modulated {
                base: c.base,
                slope: c.slope,
            }
        }
    }
}

impl Coef {
    pub const fn new(base: f64) -> Self {
        Coef { base, slope: 0.0 }
    }

    pub const fn modulated(base: f64, slope: f64) -> Self {
        Coef { base, slope }
    }

    #[inline]
    pub fn at<T: Real>(&self, s: T) -> T {
        if self.slope == 0.0 {
            T::lit(self.base)
        } else {
            T::lit(self.base) + T::lit(self.slope) * s
        }
    }
}

/// Formula of a single piece.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Piece {
    /// `c0 + c1 * xi`
    Affine { c0: Coef, c1: Coef },
    /// `c0 + c1 * xi + c2 * xi^2`
    Quadratic { c0: Coef, c1: Coef, c2: Coef },
    /// `xi - atan(xi)`
    XMinusAtan,
}

/// Roots of a restricted piece equation.
#[derive(Clone, Debug, PartialEq)]
pub struct PieceRoots<T> {
    pub points: Vec<T>,
    /// The residual vanishes identically on the whole piece interval.
    pub whole_interval: bool,
}

impl Piece {
    pub fn constant(c: f64) -> Self {
        Piece::Affine {
            c0: Coef::new(c),
            c1: Coef::new(0.0),
        }
    }

    pub fn affine(c0: f64, c1: f64) -> Self {
        Piece::Affine {
            c0: Coef::new(c0),
            c1: Coef::new(c1),
        }
    }

    pub fn quadratic(c0: f64, c1: f64, c2: f64) -> Self {
        Piece::Quadratic {
            c0: Coef::new(c0),
            c1: Coef::new(c1),
            c2: Coef::new(c2),
        }
    }

    fn coeffs<T: Real>(&self, s: T) -> Option<(T, T, T)> {
        match self {
            Piece::Affine { c0, c1 } => Some((c0.at(s), c1.at(s), T::zero())),
            Piece::Quadratic { c0, c1, c2 } => Some((c0.at(s), c1.at(s), c2.at(s))),
            Piece::XMinusAtan => None,
        }
    }

    pub fn eval<T: Real>(&self, s: T, xi: T) -> T {
        match self.coeffs(s) {
            Some((a0, a1, a2)) => {
                if xi.is_infinite() {
                    return limit_poly(a0, a1, a2, xi);
                }
                a0 + xi * (a1 + xi * a2)
            }
            None => {
                if xi.is_infinite() {
                    xi
                } else {
                    xi - xi.atan()
                }
            }
        }
    }

    pub fn derivative<T: Real>(&self, s: T, xi: T) -> T {
        match self.coeffs(s) {
            Some((_, a1, a2)) => a1 + T::lit(2.0) * a2 * xi,
            None => {
                let x2 = xi * xi;
                x2 / (T::one() + x2)
            }
        }
    }

    /// Closed range of the piece on `[lo, hi]` (endpoints may be infinite).
    pub fn range_on<T: Real>(&self, s: T, lo: T, hi: T) -> (T, T) {
        let mut vals = vec![self.eval(s, lo), self.eval(s, hi)];
        if let Some((_, a1, a2)) = self.coeffs(s) {
            if a2 != T::zero() {
                let v = -a1 / (T::lit(2.0) * a2);
                if v > lo && v < hi {
                    vals.push(self.eval(s, v));
                }
            }
        }
        let mn = vals.iter().copied().fold(T::infinity(), T::min);
        let mx = vals.iter().copied().fold(T::neg_infinity(), T::max);
        (mn, mx)
    }

    /// Solve `xi - d * piece(xi) = w` for `xi` in `[lo, hi]`.
    pub fn solve<T: Real>(&self, s: T, d: T, w: T, lo: T, hi: T) -> PieceRoots<T> {
        let inside = |x: T| x.is_finite() && x >= lo && x <= hi;
        let scale = T::one() + w.abs();
        match self.coeffs(s) {
            Some((a0, a1, a2)) => {
                // q2 xi^2 + q1 xi + q0 = 0
                let q2 = -d * a2;
                let q1 = T::one() - d * a1;
                let q0 = -d * a0 - w;
                let eps = T::epsilon() * T::lit(64.0);
                if q2.abs() <= eps * (T::one() + q1.abs()) {
                    if q1.abs() <= eps * (T::one() + (d * a1).abs()) {
                        let whole = q0.abs() <= T::tol_floor(1e-13, 64.0) * scale;
                        return PieceRoots {
                            points: vec![],
                            whole_interval: whole && lo < hi,
                        };
                    }
                    let x = -q0 / q1;
                    return PieceRoots {
                        points: snap_into(x, lo, hi).into_iter().collect(),
                        whole_interval: false,
                    };
                }
                let disc = q1 * q1 - T::lit(4.0) * q2 * q0;
                let disc_tol = T::epsilon() * T::lit(64.0) * (q1 * q1 + (T::lit(4.0) * q2 * q0).abs());
                let roots: Vec<T> = if disc < -disc_tol {
                    vec![]
                } else if disc <= disc_tol {
                    vec![-q1 / (T::lit(2.0) * q2)]
                } else {
                    // cancellation-free pair
                    let sq = disc.sqrt();
                    let qq = -(q1 + q1.signum() * sq) / T::lit(2.0);
                    let mut r = vec![qq / q2];
                    if qq != T::zero() {
                        r.push(q0 / qq);
                    } else {
                        r.push(T::zero());
                    }
                    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    r
                };
                PieceRoots {
                    points: roots.into_iter().filter_map(|x| snap_into(x, lo, hi)).collect(),
                    whole_interval: false,
                }
            }
            None => {
                // (1 - d) xi + d atan(xi) = w
                let g = |x: T| (T::one() - d) * x + d * x.atan() - w;
                if d == T::zero() {
                    return PieceRoots {
                        points: inside(w).then_some(w).into_iter().collect(),
                        whole_interval: false,
                    };
                }
                if d == T::one() {
                    let half_pi = T::FRAC_PI_2();
                    let pts = if w.abs() < half_pi {
                        snap_into(w.tan(), lo, hi).into_iter().collect()
                    } else {
                        vec![]
                    };
                    return PieceRoots {
                        points: pts,
                        whole_interval: false,
                    };
                }
                // monotone on the pieces cut by the critical points +-1/sqrt(d-1)
                let mut cuts = vec![lo];
                if d > T::one() {
                    let c = T::one() / (d - T::one()).sqrt();
                    for x in [-c, c] {
                        if x > lo && x < hi {
                            cuts.push(x);
                        }
                    }
                }
                cuts.push(hi);
                let mut pts = Vec::new();
                for win in cuts.windows(2) {
                    if let Some(x) = monotone_root(&g, win[0], win[1]) {
                        if inside(x) && pts.last().is_none_or(|&p: &T| p != x) {
                            pts.push(x);
                        }
                    }
                }
                PieceRoots {
                    points: pts,
                    whole_interval: false,
                }
            }
        }
    }
}

fn limit_poly<T: Real>(a0: T, a1: T, a2: T, xi: T) -> T {
    if a2 != T::zero() {
        a2.signum() * T::infinity()
    } else if a1 != T::zero() {
        a1.signum() * xi
    } else {
        a0
    }
}

/// Accept `x` if it lies in `[lo, hi]` up to a relative rounding slack and
/// clamp it onto the interval.
fn snap_into<T: Real>(x: T, lo: T, hi: T) -> Option<T> {
    if !x.is_finite() {
        return None;
    }
    let slack = T::epsilon() * T::lit(16.0) * (T::one() + x.abs());
    if x < lo - slack || x > hi + slack {
        None
    } else {
        Some(x.max(lo).min(hi))
    }
}

/// Root of a continuous monotone function on `[lo, hi]` (bounds may be
/// infinite), bisected to machine resolution.
fn monotone_root<T: Real, G: Fn(T) -> T>(g: &G, lo: T, hi: T) -> Option<T> {
    let mut a = if lo.is_finite() { lo } else { -T::one() };
    let mut b = if hi.is_finite() { hi } else { T::one() };
    if a > b {
        return None;
    }
    if !lo.is_finite() {
        while g(a) * g(b.min(a + T::one())) > T::zero() && a > -T::max_value() / T::lit(4.0) {
            if g(a).signum() == g(b).signum() {
                a = a * T::lit(2.0) - T::one();
            } else {
                break;
            }
        }
    }
    if !hi.is_finite() {
        while g(a).signum() == g(b).signum() && b < T::max_value() / T::lit(4.0) {
            b = b * T::lit(2.0) + T::one();
        }
    }
    let (ga, gb) = (g(a), g(b));
    if ga == T::zero() {
        return Some(a);
    }
    if gb == T::zero() {
        return Some(b);
    }
    if ga.signum() == gb.signum() {
        return None;
    }
    for _ in 0..4096 {
        let m = a + (b - a) / T::lit(2.0);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == T::zero() {
            return Some(m);
        }
        if gm.signum() == ga.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    Some(if g(a).abs() <= g(b).abs() { a } else { b })
}

/// Piecewise-scalar map `phi(t, xi)`: piece `i` covers
/// `(breakpoints[i-1], breakpoints[i]]`, with infinite outer ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseScalar {
    #[serde(default)]
    pub modulator: TimeFunction,
    pub breakpoints: Vec<Coef>,
    pub pieces: Vec<Piece>,
}

/// Times at which structural invariants are spot-checked.
const CHECK_TIMES: [f64; 7] = [0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0];

impl PiecewiseScalar {
    pub fn new(modulator: TimeFunction, breakpoints: Vec<Coef>, pieces: Vec<Piece>) -> Result<Self> {
        let pw = Self {
            modulator,
            breakpoints,
            pieces,
        };
        pw.validate()?;
        Ok(pw)
    }

    /// Pieces tile the line (count matches), breakpoints are ordered and
    /// adjacent pieces agree at shared breakpoints.
    pub fn validate(&self) -> Result<()> {
        if self.pieces.len() != self.breakpoints.len() + 1 {
            return Err(Error::dim(
                "piecewise.pieces",
                self.breakpoints.len() + 1,
                self.pieces.len(),
            ));
        }
        for &t in &CHECK_TIMES {
            let s = self.modulator.eval(t);
            let bps: Vec<f64> = self.breakpoints.iter().map(|c| c.at(s)).collect();
            if bps.iter().any(|b| !b.is_finite()) || bps.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::Config(format!(
                    "piecewise breakpoints must be finite and non-decreasing (t = {t})"
                )));
            }
            for (i, &b) in bps.iter().enumerate() {
                let left = self.pieces[i].eval(s, b);
                let right = self.pieces[i + 1].eval(s, b);
                if (left - right).abs() > 1e-9 * (1.0 + left.abs()) {
                    return Err(Error::Config(format!(
                        "piecewise nonlinearity is discontinuous at breakpoint {b} (t = {t}): {left} vs {right}"
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn modulation<T: Real>(&self, t: T) -> T {
        self.modulator.eval(t)
    }

    pub fn breakpoints_at<T: Real>(&self, t: T) -> Vec<T> {
        let s = self.modulation(t);
        self.breakpoints.iter().map(|c| c.at(s)).collect()
    }

    /// `(lo, hi)` of every piece at time `t`.
    pub fn intervals<T: Real>(&self, t: T) -> Vec<(T, T)> {
        let bps = self.breakpoints_at(t);
        (0..self.pieces.len())
            .map(|i| {
                let lo = if i == 0 { T::neg_infinity() } else { bps[i - 1] };
                let hi = if i == bps.len() { T::infinity() } else { bps[i] };
                (lo, hi)
            })
            .collect()
    }

    pub fn piece_index<T: Real>(&self, t: T, xi: T) -> usize {
        let s = self.modulation(t);
        self.breakpoints
            .iter()
            .position(|c| xi <= c.at(s))
            .unwrap_or(self.breakpoints.len())
    }

    pub fn eval<T: Real>(&self, t: T, xi: T) -> T {
        let s = self.modulation(t);
        self.pieces[self.piece_index(t, xi)].eval(s, xi)
    }

    pub fn derivative<T: Real>(&self, t: T, xi: T) -> T {
        let s = self.modulation(t);
        self.pieces[self.piece_index(t, xi)].derivative(s, xi)
    }
}

/// Radial map `f(t, xi) = psi(t, |xi|) xi / |xi|` with a piecewise profile
/// `psi` on `r >= 0` and `psi(t, 0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseRadial {
    pub dim: usize,
    pub profile: PiecewiseScalar,
}

impl PiecewiseRadial {
    pub fn new(dim: usize, profile: PiecewiseScalar) -> Result<Self> {
        let r = Self { dim, profile };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("radial nonlinearity needs dim >= 1".into()));
        }
        self.profile.validate()?;
        for &t in &CHECK_TIMES {
            let v: f64 = self.profile.eval(t, 0.0);
            if v.abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "radial profile must vanish at r = 0 (t = {t}, psi = {v})"
                )));
            }
        }
        Ok(())
    }
}
