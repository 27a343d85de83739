//! Brute-force fibre oracle: dense grid scans, independent of the solver
//! code paths, used to cross-check exact enumeration.

use super::fibre::{FibreSet, Segment};
use super::solver::{cluster, newton};
use crate::derivative::f_map_unchecked;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::Nonlinearity;

/// Residual magnitude treated as zero when detecting flat runs.
const FLAT_TOL: f64 = 1e-10;

/// Scan `[-R, R]^p` (`p = 1` or `2`) with grid step `h_scan` for solutions of
/// `F_t(xi) = w`.
///
/// Scalar case: flat runs (`|residual| < 1e-10` on consecutive grid points)
/// become segments, sign changes are bisected to `1e-12`, and touching zeros
/// are refined by golden-section search. Planar case: grid cells with small
/// residual seed local Newton runs whose limits are clustered.
pub fn brute_force_fibre_oracle(
    d: &Mat<f64>,
    f: &Nonlinearity,
    t: f64,
    w: &[f64],
    radius: f64,
    h_scan: f64,
) -> Result<FibreSet<f64>> {
    if !(radius > 0.0) || !(h_scan > 0.0) {
        return Err(Error::Config(format!(
            "oracle needs R > 0 and h_scan > 0, got R = {radius}, h_scan = {h_scan}"
        )));
    }
    if w.len() != d.rows() || f.p() != d.rows() {
        return Err(Error::dim("w", d.rows(), w.len()));
    }
    match w.len() {
        1 => Ok(scan_1d(d, f, t, w[0], radius, h_scan)),
        2 => Ok(scan_2d(d, f, t, w, radius, h_scan)),
        p => Err(Error::Config(format!("oracle supports p = 1 or 2, got p = {p}"))),
    }
}

fn scan_1d(d: &Mat<f64>, f: &Nonlinearity, t: f64, w: f64, radius: f64, h: f64) -> FibreSet<f64> {
    let g = |x: f64| f_map_unchecked(d, f, t, &[x])[0] - w;
    let n = (2.0 * radius / h).round() as usize + 1;
    let xs: Vec<f64> = (0..n).map(|i| -radius + i as f64 * h).collect();
    let rs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let zero = |i: usize| rs[i].abs() < FLAT_TOL;

    let mut out = FibreSet::empty(false);
    let mut in_flat = vec![false; n];
    let mut i = 0;
    while i < n {
        if zero(i) {
            let mut j = i;
            while j + 1 < n && zero(j + 1) {
                j += 1;
            }
            if j > i {
                out.segments.push(Segment::interval(xs[i], xs[j]));
            } else {
                out.points.push(vec![xs[i]]);
            }
            for flag in &mut in_flat[i..=j] {
                *flag = true;
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    for i in 0..n.saturating_sub(1) {
        if in_flat[i] || in_flat[i + 1] {
            continue;
        }
        if rs[i].signum() != rs[i + 1].signum() && rs[i].is_finite() && rs[i + 1].is_finite() {
            out.points.push(vec![bisect(&g, xs[i], xs[i + 1], rs[i])]);
        } else if i > 0 && !in_flat[i - 1] {
            // touching zero: local minimum of |g| without a sign change
            let (a, b, c) = (rs[i - 1].abs(), rs[i].abs(), rs[i + 1].abs());
            let same_sign = rs[i - 1].signum() == rs[i].signum() && rs[i].signum() == rs[i + 1].signum();
            if same_sign && b <= a && b < c && b < 10.0 * h {
                let x = golden_min(|x| g(x).abs(), xs[i - 1], xs[i + 1]);
                if g(x).abs() < FLAT_TOL {
                    out.points.push(vec![x]);
                }
            }
        }
    }
    out.points.sort_by(|a, b| a[0].total_cmp(&b[0]));
    out.points.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-10);
    out
}

fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64) -> f64 {
    while b - a > 1e-12 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn golden_min(phi: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    while b - a > 1e-13 {
        if phi(c) < phi(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    0.5 * (a + b)
}

fn scan_2d(d: &Mat<f64>, f: &Nonlinearity, t: f64, w: &[f64], radius: f64, h: f64) -> FibreSet<f64> {
    let n = (2.0 * radius / h).round() as usize + 1;
    let cell_tol = 4.0 * h * (1.0 + d.op_norm());
    let mut cands = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let xi = [-radius + i as f64 * h, -radius + j as f64 * h];
            let r = linalg::dist(&f_map_unchecked(d, f, t, &xi), w);
            if r < cell_tol {
                let out = newton(d, f, t, w, &xi, 1e-12, 100);
                if out.converged {
                    cands.push((out.y, out.residual));
                }
            }
        }
    }
    FibreSet {
        points: cluster(cands, 1e-6),
        ..FibreSet::empty(false)
    }
}
