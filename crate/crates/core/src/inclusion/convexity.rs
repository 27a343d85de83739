//! Convexity of fibre images `f(t, F_t^{-1}(w))`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::model::{Nonlinearity, PiecewiseScalar};
use crate::output::{FibreElement, FibreSet};
use crate::scalar::{vec_to_f64, Real};

/// Two image points whose midpoint is not in the image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityWitness {
    pub t: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Distance from `(a + b) / 2` to the image.
    pub midpoint_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ConvexityVerdict {
    ConvexExact,
    ConvexSampled,
    Violation { witness: ConvexityWitness },
}

impl ConvexityVerdict {
    pub fn is_convex(&self) -> bool {
        !matches!(self, ConvexityVerdict::Violation { .. })
    }
}

const GAP_TOL: f64 = 1e-9;
const SEGMENT_SAMPLES: usize = 64;

/// Range of a piecewise map over `[a, b]`.
fn pw_range<T: Real>(pw: &PiecewiseScalar, t: T, a: T, b: T) -> (T, T) {
    let s = pw.modulation(t);
    let mut out = (T::infinity(), T::neg_infinity());
    for ((lo, hi), piece) in pw.intervals(t).into_iter().zip(&pw.pieces) {
        let (lo, hi) = (lo.max(a), hi.min(b));
        if lo <= hi {
            let (m0, m1) = piece.range_on(s, lo, hi);
            out = (out.0.min(m0), out.1.max(m1));
        }
    }
    out
}

/// Convexity of a union of intervals on the line `R e`; a gap wider than the
/// tolerance gives the witness pair across it.
fn intervals_verdict<T: Real>(t: T, e: &[T], mut ivs: Vec<(T, T)>) -> ConvexityVerdict {
    ivs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let mut hi = match ivs.first() {
        Some(iv) => iv.1,
        None => return ConvexityVerdict::ConvexExact,
    };
    for &(a, b) in &ivs[1..] {
        if a - hi > T::lit(GAP_TOL) * (T::one() + a.abs().max(hi.abs())) {
            return ConvexityVerdict::Violation {
                witness: ConvexityWitness {
                    t: t.as_f64(),
                    a: vec_to_f64(&linalg::scale(e, hi)),
                    b: vec_to_f64(&linalg::scale(e, a)),
                    midpoint_distance: ((a - hi) / T::lit(2.0)).as_f64(),
                },
            };
        }
        hi = hi.max(b);
    }
    ConvexityVerdict::ConvexExact
}

/// Decide whether `f(t, fib)` is convex. Piecewise-scalar and piecewise-
/// radial fibres are handled exactly as unions of intervals (or balls and
/// annuli); other fibres are sampled and midpoints of sample pairs are
/// tested for membership.
pub fn check_a3_convexity<T: Real>(f: &Nonlinearity, t: T, w: &[T], fib: &FibreSet<T>) -> ConvexityVerdict {
    if fib.is_empty() || fib.singleton().is_some() {
        return ConvexityVerdict::ConvexExact;
    }
    if fib.exact {
        if let Some(pw) = f.as_piecewise_scalar() {
            let ivs = fib
                .sorted_elements()
                .into_iter()
                .filter_map(|el| match el {
                    FibreElement::Point(p) => {
                        let v = pw.eval(t, p[0]);
                        Some((v, v))
                    }
                    FibreElement::Segment(s) => {
                        let (a, b) = s.bounds_1d();
                        Some(pw_range(pw, t, a, b))
                    }
                    FibreElement::Shell(_) => None,
                })
                .collect();
            return intervals_verdict(t, &[T::one()], ivs);
        }
        if let Some(r) = f.as_piecewise_radial() {
            if let Some(v) = radial_verdict(&r.profile, t, w, fib) {
                return v;
            }
        }
    }
    sampled_verdict(f, t, fib)
}

fn radial_verdict<T: Real>(profile: &PiecewiseScalar, t: T, w: &[T], fib: &FibreSet<T>) -> Option<ConvexityVerdict> {
    let rho = linalg::norm(w);
    if rho > T::zero() {
        // every element lies on the line R w; work with signed radii along it
        let e = linalg::scale(w, T::one() / rho);
        let coord = |z: &[T]| linalg::dot(z, &e);
        let mut ivs = Vec::new();
        for el in fib.sorted_elements() {
            match el {
                FibreElement::Point(p) => {
                    let c = coord(&p);
                    let v = c.signum() * profile.eval(t, c.abs());
                    ivs.push((v, v));
                }
                FibreElement::Segment(s) => {
                    let c0 = coord(&s.start);
                    let sign = coord(&s.dir).signum();
                    let (r0, r1) = (c0.abs(), c0.abs() + s.length);
                    let (m0, m1) = pw_range(profile, t, r0, r1);
                    ivs.push(if sign > T::zero() { (m0, m1) } else { (-m1, -m0) });
                }
                FibreElement::Shell(_) => return None,
            }
        }
        return Some(intervals_verdict(t, &e, ivs));
    }
    // w = 0: the image is a union of origin-centred annuli {psi(r) u}
    let dim = fib.shells.first().map(|s| s.dim).or_else(|| fib.points.first().map(Vec::len))?;
    let mut e = vec![T::zero(); dim];
    e[0] = T::one();
    let mut radii: Vec<(T, T)> = Vec::new();
    for p in &fib.points {
        let v = profile.eval(t, linalg::norm(p)).abs();
        radii.push((v, v));
    }
    for sh in &fib.shells {
        let (m0, m1) = pw_range(profile, t, sh.r_min, sh.r_max);
        if m0 <= T::zero() && m1 >= T::zero() {
            radii.push((T::zero(), m0.abs().max(m1)));
        } else {
            radii.push((m0.abs().min(m1.abs()), m0.abs().max(m1.abs())));
        }
    }
    // an annulus is convex only together with everything down to the origin;
    // in one dimension the image is symmetric so the same test applies
    let mut ivs: Vec<(T, T)> = radii.iter().map(|&(a, b)| (-b, -a)).collect();
    ivs.extend(radii.iter().copied());
    Some(intervals_verdict(t, &e, ivs))
}

fn sampled_verdict<T: Real>(f: &Nonlinearity, t: T, fib: &FibreSet<T>) -> ConvexityVerdict {
    // images grouped by element; the coverage radius of a segment image is
    // the largest gap between its consecutive samples
    let mut samples: Vec<Vec<T>> = Vec::new();
    let mut cover = T::zero();
    for el in fib.sorted_elements() {
        let sub = FibreSet {
            points: vec![],
            segments: vec![],
            shells: vec![],
            exact: false,
        };
        let pts = match el {
            FibreElement::Point(p) => vec![p],
            FibreElement::Segment(s) => FibreSet { segments: vec![s], ..sub }.sample_points(SEGMENT_SAMPLES),
            FibreElement::Shell(sh) => FibreSet { shells: vec![sh], ..sub }.sample_points(SEGMENT_SAMPLES),
        };
        let imgs: Vec<Vec<T>> = pts.iter().map(|z| f.eval(t, z)).collect();
        for pair in imgs.windows(2) {
            cover = cover.max(linalg::dist(&pair[0], &pair[1]));
        }
        samples.extend(imgs);
    }
    let tol = T::lit(GAP_TOL) + cover;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let mid = linalg::scale(&linalg::add(&samples[i], &samples[j]), T::lit(0.5));
            let dmin = samples
                .iter()
                .map(|s| linalg::dist(s, &mid))
                .fold(T::infinity(), T::min);
            if dmin > tol {
                return ConvexityVerdict::Violation {
                    witness: ConvexityWitness {
                        t: t.as_f64(),
                        a: vec_to_f64(&samples[i]),
                        b: vec_to_f64(&samples[j]),
                        midpoint_distance: dmin.as_f64(),
                    },
                };
            }
        }
    }
    ConvexityVerdict::ConvexSampled
}
