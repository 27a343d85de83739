//! Adaptive Simpson quadrature for reference solutions.

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// `int_a^b f` to absolute tolerance `tol` (Richardson-corrected Simpson).
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(fa, fm, fb, a, b);
    refine(&f, a, b, fa, fm, fb, whole, tol, 50)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_integrals() {
        assert!((integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-12) - 2.0).abs() < 1e-11);
        let v = integrate(f64::tan, 0.0, 1.5, 1e-13);
        assert!((v + 1.5f64.cos().ln()).abs() < 1e-11);
    }
}
