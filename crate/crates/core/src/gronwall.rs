//! Gronwall-type bound `c exp(int_{t0}^t h)` on a sampled grid.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Evaluate `t -> c * exp(int_{grid[0]}^t h(s) ds)` at every grid point,
/// integrating the samples `h_values` with the trapezoid rule.
pub fn gronwall_bound<T: Real>(c: T, h_values: &[T], grid: &[T]) -> Result<Vec<T>> {
    if !(c >= T::zero()) {
        return Err(Error::Config(format!("gronwall constant must be non-negative, got {c}")));
    }
    if grid.is_empty() {
        return Err(Error::Config("gronwall grid is empty".into()));
    }
    if h_values.len() != grid.len() {
        return Err(Error::dim("h_values", grid.len(), h_values.len()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("gronwall grid must be strictly increasing".into()));
    }
    if let Some(k) = h_values.iter().position(|&h| !(h >= T::zero())) {
        return Err(Error::Config(format!(
            "h must be non-negative, sample {k} is {}",
            h_values[k]
        )));
    }
    let half = T::lit(0.5);
    let mut integral = T::zero();
    let mut out = Vec::with_capacity(grid.len());
    out.push(c);
    for k in 1..grid.len() {
        integral += half * (grid[k] - grid[k - 1]) * (h_values[k] + h_values[k - 1]);
        out.push(c * integral.exp());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrand_is_exact() {
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let b = gronwall_bound(2.0, &vec![3.0; 11], &grid).unwrap();
        assert!((b[10] - 2.0 * 3f64.exp()).abs() < 1e-9);
        let one = gronwall_bound(1.0, &vec![0.0; 11], &grid).unwrap();
        assert!(one.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn linear_integrand_matches_closed_form() {
        let n = 1000;
        let grid: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 / (n - 1) as f64).collect();
        let b = gronwall_bound(1.0, &grid, &grid).unwrap();
        for (t, v) in grid.iter().zip(&b) {
            assert!((v - (t * t / 2.0).exp()).abs() < 1e-4);
        }
    }

    #[test]
    fn invalid_input_rejected() {
        assert!(gronwall_bound(1.0, &[0.0, -1.0], &[0.0, 1.0]).is_err());
        assert!(gronwall_bound(1.0, &[0.0, 1.0], &[0.0, 0.0]).is_err());
        assert!(gronwall_bound(-1.0, &[0.0], &[0.0]).is_err());
    }
}
