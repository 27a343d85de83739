//! Seeded random and low-discrepancy point generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in base `b`.
pub fn radical_inverse(mut index: u64, b: u32) -> f64 {
    let b = b as u64;
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % b) as f64;
        index /= b;
        f *= inv;
    }
    r
}

/// Halton point in `[0, 1)^dim`; dimensions beyond the prime table reuse
/// scrambled bases.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|k| {
            let base = PRIMES[k % PRIMES.len()];
            let shift = (k / PRIMES.len()) as f64 * 0.5_f64.sqrt();
            (radical_inverse(index, base) + shift).fract()
        })
        .collect()
}

/// Deterministic low-discrepancy points in the ball `B(center, radius)`.
/// Points come from a Halton sequence on the cube `[-1, 1]^p` (offset by
/// `seed`) with rejection outside the unit ball for `p <= 6`.
pub fn halton_ball(center: &[f64], radius: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let p = center.len();
    let mut out = Vec::with_capacity(count);
    let mut index = 1 + (seed % 4096) * 7919;
    while out.len() < count {
        let u: Vec<f64> = halton(index, p).iter().map(|&h| 2.0 * h - 1.0).collect();
        index += 1;
        if p <= 6 && u.iter().map(|v| v * v).sum::<f64>() > 1.0 {
            continue;
        }
        out.push(center.iter().zip(&u).map(|(c, v)| c + radius * v).collect());
    }
    out
}

/// Uniform point on the unit sphere in `R^p`.
pub fn unit_sphere(rng: &mut SeededRng, p: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-12 {
            return g.into_iter().map(|v| v / n).collect();
        }
    }
}

/// Uniform point in the ball `B(center, radius)`.
pub fn uniform_ball(rng: &mut SeededRng, center: &[f64], radius: f64) -> Vec<f64> {
    let p = center.len();
    let dir = unit_sphere(rng, p);
    let r = radius * rng.random::<f64>().powf(1.0 / p as f64);
    center.iter().zip(dir).map(|(c, d)| c + r * d).collect()
}

/// Uniform point in the box `[lo, hi]^p`.
pub fn uniform_box(rng: &mut SeededRng, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .map(|(&a, &b)| a + (b - a) * rng.random::<f64>())
        .collect()
}

/// Sphere directions for probing: the signed coordinate axes followed by
/// seeded random directions, `count` in total (at least the axes).
pub fn probe_directions(p: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for k in 0..p {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; p];
            e[k] = s;
            out.push(e);
        }
    }
    if p > 1 {
        let mut r = rng(seed);
        while out.len() < count {
            out.push(unit_sphere(&mut r, p));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        let v: Vec<f64> = (1..5).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(v, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn ball_points_stay_inside_and_repeat() {
        let a = halton_ball(&[1.0, -1.0], 3.0, 50, 7);
        assert_eq!(a, halton_ball(&[1.0, -1.0], 3.0, 50, 7));
        assert!(a.iter().all(|q| ((q[0] - 1.0).powi(2) + (q[1] + 1.0).powi(2)).sqrt() <= 3.0));
        let mut r = rng(3);
        for _ in 0..100 {
            let q = uniform_ball(&mut r, &[0.0; 3], 0.5);
            assert!(q.iter().map(|v| v * v).sum::<f64>().sqrt() <= 0.5);
        }
    }
}
