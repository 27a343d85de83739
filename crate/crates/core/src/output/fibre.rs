//! Fibres `F_t^{-1}(w)` and their exact enumeration for piecewise structure.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::{Nonlinearity, PiecewiseScalar};
use crate::scalar::Real;

/// Line segment `{start + s dir : 0 <= s <= length}` with unit `dir`;
/// `length` may be infinite (a ray).
#[derive(Clone, Debug, PartialEq)]
pub struct Segment<T> {
    pub start: Vec<T>,
    pub dir: Vec<T>,
    pub length: T,
}

impl<T: Real> Segment<T> {
    /// Scalar interval `[a, b]`; either end may be infinite.
    pub fn interval(a: T, b: T) -> Self {
        if a.is_infinite() {
            // store as a ray pointing down from b
            Segment {
                start: vec![b],
                dir: vec![-T::one()],
                length: b - a,
            }
        } else {
            Segment {
                start: vec![a],
                dir: vec![T::one()],
                length: b - a,
            }
        }
    }

    pub fn through(a: &[T], b: &[T]) -> Self {
        let d = linalg::sub(b, a);
        let len = linalg::norm(&d);
        let dir = if len > T::zero() {
            linalg::scale(&d, T::one() / len)
        } else {
            let mut e = vec![T::zero(); a.len()];
            e[0] = T::one();
            e
        };
        Segment {
            start: a.to_vec(),
            dir,
            length: len,
        }
    }

    pub fn dim(&self) -> usize {
        self.start.len()
    }

    pub fn point_at(&self, s: T) -> Vec<T> {
        linalg::axpy(&self.start, s, &self.dir)
    }

    pub fn end(&self) -> Option<Vec<T>> {
        self.length.is_finite().then(|| self.point_at(self.length))
    }

    /// Scalar endpoints `(lo, hi)` for one-dimensional segments.
    pub fn bounds_1d(&self) -> (T, T) {
        let a = self.start[0];
        let b = if self.length.is_finite() {
            a + self.dir[0] * self.length
        } else {
            self.dir[0] * T::infinity()
        };
        (a.min(b), a.max(b))
    }

    /// Closest point of the segment to `y`.
    pub fn project(&self, y: &[T]) -> Vec<T> {
        let s = linalg::dot(&linalg::sub(y, &self.start), &self.dir);
        self.point_at(s.max(T::zero()).min(self.length))
    }

    /// Point at relative parameter `s in [0, 1]`; `None` for rays.
    pub fn at_fraction(&self, s: T) -> Option<Vec<T>> {
        self.length.is_finite().then(|| self.point_at(s * self.length))
    }
}

/// Origin-centred shell `{xi : r_min <= |xi| <= r_max}` (a ball when
/// `r_min = 0`, a sphere when the radii agree).
#[derive(Clone, Debug, PartialEq)]
pub struct Shell<T> {
    pub r_min: T,
    pub r_max: T,
    pub dim: usize,
}

impl<T: Real> Shell<T> {
    pub fn project(&self, y: &[T]) -> Vec<T> {
        let r = linalg::norm(y);
        if r == T::zero() {
            let mut e = vec![T::zero(); self.dim];
            e[0] = self.r_min;
            return e;
        }
        let target = r.max(self.r_min).min(self.r_max);
        linalg::scale(y, target / r)
    }
}

/// One element of a fibre, with a representative point used for ordering
/// and branch bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub enum FibreElement<T> {
    Point(Vec<T>),
    Segment(Segment<T>),
    Shell(Shell<T>),
}

impl<T: Real> FibreElement<T> {
    /// Closest point of the element to `y`.
    pub fn project(&self, y: &[T]) -> Vec<T> {
        match self {
            FibreElement::Point(p) => p.clone(),
            FibreElement::Segment(s) => s.project(y),
            FibreElement::Shell(s) => s.project(y),
        }
    }

    /// Minimum-norm point of the element.
    pub fn representative(&self) -> Vec<T> {
        let zero = vec![T::zero(); self.dim()];
        self.project(&zero)
    }

    pub fn dim(&self) -> usize {
        match self {
            FibreElement::Point(p) => p.len(),
            FibreElement::Segment(s) => s.dim(),
            FibreElement::Shell(s) => s.dim,
        }
    }
}

/// Exact or approximate description of `F_t^{-1}(w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FibreSet<T> {
    pub points: Vec<Vec<T>>,
    pub segments: Vec<Segment<T>>,
    pub shells: Vec<Shell<T>>,
    pub exact: bool,
}

fn lex_cmp<T: Real>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

impl<T: Real> FibreSet<T> {
    pub fn empty(exact: bool) -> Self {
        Self {
            points: vec![],
            segments: vec![],
            shells: vec![],
            exact,
        }
    }

    pub fn single(point: Vec<T>, exact: bool) -> Self {
        Self {
            points: vec![point],
            ..Self::empty(exact)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.segments.is_empty() && self.shells.is_empty()
    }

    /// The only point, when the fibre is a singleton.
    pub fn singleton(&self) -> Option<&[T]> {
        (self.points.len() == 1 && self.segments.is_empty() && self.shells.is_empty())
            .then(|| self.points[0].as_slice())
    }

    pub fn element_count(&self) -> usize {
        self.points.len() + self.segments.len() + self.shells.len()
    }

    /// Elements sorted by the norm of their representative, ties broken
    /// lexicographically.
    pub fn sorted_elements(&self) -> Vec<FibreElement<T>> {
        let mut els: Vec<(Vec<T>, FibreElement<T>)> = self
            .points
            .iter()
            .map(|p| FibreElement::Point(p.clone()))
            .chain(self.segments.iter().cloned().map(FibreElement::Segment))
            .chain(self.shells.iter().cloned().map(FibreElement::Shell))
            .map(|e| (e.representative(), e))
            .collect();
        els.sort_by(|(ra, _), (rb, _)| {
            linalg::norm(ra)
                .partial_cmp(&linalg::norm(rb))
                .unwrap_or(Ordering::Equal)
                .then_with(|| lex_cmp(ra, rb))
        });
        els.into_iter().map(|(_, e)| e).collect()
    }

    /// Closest fibre point to `y` (projection onto segments and shells).
    pub fn nearest(&self, y: &[T]) -> Option<Vec<T>> {
        self.sorted_elements()
            .iter()
            .map(|e| e.project(y))
            .min_by(|a, b| {
                linalg::dist(a, y)
                    .partial_cmp(&linalg::dist(b, y))
                    .unwrap_or(Ordering::Equal)
            })
    }

    /// Finite sample of the fibre: all points, segment endpoints (and
    /// `per_segment` interior points), and shell points along the axes.
    pub fn sample_points(&self, per_segment: usize) -> Vec<Vec<T>> {
        let mut out = self.points.clone();
        for s in &self.segments {
            if s.length.is_finite() {
                for k in 0..=per_segment.max(1) {
                    let frac = T::lit(k as f64 / per_segment.max(1) as f64);
                    out.push(s.point_at(frac * s.length));
                }
            } else {
                out.push(s.start.clone());
            }
        }
        for sh in &self.shells {
            for r in [sh.r_min, sh.r_max] {
                for k in 0..sh.dim {
                    for sign in [T::one(), -T::one()] {
                        let mut e = vec![T::zero(); sh.dim];
                        e[k] = sign * r;
                        out.push(e);
                    }
                }
            }
        }
        out
    }
}

fn same_point<T: Real>(a: T, b: T) -> bool {
    (a - b).abs() <= T::epsilon() * T::lit(64.0) * (T::one() + a.abs().max(b.abs()))
}

/// Scalar solutions of `xi - d phi(t, xi) = w` with `xi >= domain_lo`:
/// isolated points and maximal intervals on which the residual vanishes.
pub(crate) fn scalar_solutions<T: Real>(
    pw: &PiecewiseScalar,
    d: T,
    t: T,
    w: T,
    domain_lo: T,
) -> (Vec<T>, Vec<(T, T)>) {
    let s = pw.modulation(t);
    let mut pts: Vec<T> = Vec::new();
    let mut ivs: Vec<(T, T)> = Vec::new();
    for ((lo, hi), piece) in pw.intervals(t).into_iter().zip(&pw.pieces) {
        let lo = lo.max(domain_lo);
        if hi < lo {
            continue;
        }
        let roots = piece.solve(s, d, w, lo, hi);
        if roots.whole_interval {
            ivs.push((lo, hi));
        } else {
            pts.extend(roots.points);
        }
    }
    ivs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let mut merged: Vec<(T, T)> = Vec::new();
    for iv in ivs {
        match merged.last_mut() {
            Some(last) if iv.0 <= last.1 || same_point(iv.0, last.1) => last.1 = last.1.max(iv.1),
            _ => merged.push(iv),
        }
    }
    let (degenerate, merged): (Vec<_>, Vec<_>) = merged.into_iter().partition(|(a, b)| a == b);
    pts.extend(degenerate.into_iter().map(|(a, _)| a));
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    pts.dedup_by(|a, b| same_point(*a, *b));
    pts.retain(|&x| {
        !merged
            .iter()
            .any(|&(a, b)| (x >= a && x <= b) || same_point(x, a) || same_point(x, b))
    });
    (pts, merged)
}

/// Whether exact enumeration is available for `f` with feedthrough `d`.
pub fn supports_exact<T: Real>(d: &Mat<T>, f: &Nonlinearity) -> bool {
    if f.as_piecewise_scalar().is_some() {
        return d.shape() == (1, 1);
    }
    if let Some(r) = f.as_piecewise_radial() {
        return d.shape() == (r.dim, r.dim) && d.as_scalar_identity().is_some();
    }
    false
}

/// Exact fibre for piecewise-scalar (`p = m = 1`) or piecewise-radial (with
/// `D = c I`) nonlinearities.
pub fn enumerate_fibre_exact<T: Real>(d: &Mat<T>, f: &Nonlinearity, t: T, w: &[T]) -> Result<FibreSet<T>> {
    if w.len() != f.p() {
        return Err(Error::dim("w", f.p(), w.len()));
    }
    if let Some(pw) = f.as_piecewise_scalar() {
        if d.shape() != (1, 1) {
            return Err(Error::dim("D", "1x1", format!("{}x{}", d.rows(), d.cols())));
        }
        let (pts, ivs) = scalar_solutions(pw, d[(0, 0)], t, w[0], T::neg_infinity());
        return Ok(FibreSet {
            points: pts.into_iter().map(|x| vec![x]).collect(),
            segments: ivs.into_iter().map(|(a, b)| Segment::interval(a, b)).collect(),
            shells: vec![],
            exact: true,
        });
    }
    if let Some(r) = f.as_piecewise_radial() {
        let c = d.as_scalar_identity().filter(|_| d.rows() == r.dim).ok_or_else(|| {
            Error::Config("exact radial fibres need D = c I with matching dimension".into())
        })?;
        let rho = linalg::norm(w);
        let mut out = FibreSet::empty(true);
        if rho > T::zero() {
            let u = linalg::scale(w, T::one() / rho);
            for (target, sign) in [(rho, T::one()), (-rho, -T::one())] {
                let dir = linalg::scale(&u, sign);
                let (pts, ivs) = scalar_solutions(&r.profile, c, t, target, T::zero());
                out.points.extend(pts.into_iter().map(|s| linalg::scale(&dir, s)));
                out.segments.extend(ivs.into_iter().map(|(a, b)| Segment {
                    start: linalg::scale(&dir, a),
                    dir: dir.clone(),
                    length: b - a,
                }));
            }
        } else {
            let (pts, ivs) = scalar_solutions(&r.profile, c, t, T::zero(), T::zero());
            let touches_origin = ivs.first().is_some_and(|iv| iv.0 == T::zero());
            if !touches_origin {
                out.points.push(vec![T::zero(); r.dim]);
            }
            for x in pts.into_iter().filter(|&x| x > T::zero()) {
                out.shells.push(Shell {
                    r_min: x,
                    r_max: x,
                    dim: r.dim,
                });
            }
            for (a, b) in ivs {
                out.shells.push(Shell {
                    r_min: a,
                    r_max: b,
                    dim: r.dim,
                });
            }
        }
        return Ok(out);
    }
    Err(Error::Config(
        "exact fibre enumeration needs a piecewise-scalar or piecewise-radial nonlinearity".into(),
    ))
}
