//! Small dense linear algebra: the systems handled here have a handful of
//! states, so a row-major `Vec` with partial-pivot LU and cyclic Jacobi is all
//! that is needed.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<T>>", into = "Vec<Vec<T>>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> TryFrom<Vec<Vec<T>>> for Mat<T> {
    type Error = Error;
    fn try_from(rows: Vec<Vec<T>>) -> Result<Self> {
        Mat::from_rows(&rows)
    }
}

impl<T: Real> From<Mat<T>> for Vec<Vec<T>> {
    fn from(m: Mat<T>) -> Self {
        m.to_rows()
    }
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// `s * I`.
    pub fn scalar(n: usize, s: T) -> Self {
        Self::identity(n).scale(s)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// `a b^T`.
    pub fn outer(a: &[T], b: &[T]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j])
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim("matrix data", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Build from nested rows; ragged input is rejected. An empty outer list
    /// is a 0x0 matrix.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::dim(&format!("matrix row {i}"), c, row.len()));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    pub fn from_f64_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let conv: Vec<Vec<T>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| T::lit(x)).collect())
            .collect();
        Self::from_rows(&conv)
    }

    pub fn column(v: &[T]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.as_f64()).collect())
            .collect()
    }

    pub fn cast<U: Real>(&self) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| U::lit(x.as_f64())).collect(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[T]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn mul(&self, other: &Mat<T>) -> Mat<T> {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat<T> {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, s: T) -> Mat<T> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Mat<T>) -> Mat<T> {
        debug_assert_eq!(self.shape(), other.shape());
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Mat<T>) -> Mat<T> {
        debug_assert_eq!(self.shape(), other.shape());
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Mat<T>) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    /// If the matrix is `s * I` (square), return `s`.
    pub fn as_scalar_identity(&self) -> Option<T> {
        if self.rows != self.cols || self.rows == 0 {
            return None;
        }
        let s = self[(0, 0)];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let expect = if i == j { s } else { T::zero() };
                if self[(i, j)] != expect {
                    return None;
                }
            }
        }
        Some(s)
    }

    /// LU factorisation with partial pivoting. `None` if exactly singular.
    fn lu(&self) -> Option<(Mat<T>, Vec<usize>, T)> {
        assert_eq!(self.rows, self.cols, "LU requires a square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[(i, k)].abs()))
                .fold((k, -T::one()), |acc, c| if c.1 > acc.1 { c } else { acc });
            if pmax == T::zero() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let factor = a[(i, k)] / pivot;
                a[(i, k)] = factor;
                for j in k + 1..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= factor * v;
                }
            }
        }
        Some((a, perm, sign))
    }

    pub fn det(&self) -> T {
        match self.lu() {
            None => T::zero(),
            Some((lu, _, sign)) => (0..self.rows).fold(sign, |acc, i| acc * lu[(i, i)]),
        }
    }

    /// Solve `self * x = b`; `None` when singular or non-finite.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        let n = self.rows;
        let (lu, perm, _) = self.lu()?;
        let mut x: Vec<T> = perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let v = x[k];
                x[i] -= lu[(i, k)] * v;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let v = x[k];
                x[i] -= lu[(i, k)] * v;
            }
            x[i] /= lu[(i, i)];
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }

    pub fn inverse(&self) -> Option<Mat<T>> {
        let n = self.rows;
        let mut out = Mat::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            out.set_col(j, &self.solve(&e)?);
        }
        Some(out)
    }

    /// Eigenvalues of a symmetric matrix, ascending (cyclic Jacobi).
    pub fn symmetric_eigenvalues(&self) -> Vec<T> {
        let n = self.rows;
        let mut a = self.clone();
        let tol = T::epsilon() * T::lit(4.0);
        for _sweep in 0..64 {
            let off: T = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            let diag: T = (0..n).map(|i| a[(i, i)] * a[(i, i)]).sum();
            if off <= tol * tol * (diag + off) || off == T::zero() {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<T> = (0..n).map(|i| a[(i, i)]).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }

    /// Spectral norm (largest singular value).
    pub fn op_norm(&self) -> T {
        if self.rows == 0 || self.cols == 0 {
            return T::zero();
        }
        let gram = self.transpose().mul(self);
        gram.symmetric_eigenvalues()
            .last()
            .copied()
            .unwrap_or_else(T::zero)
            .max(T::zero())
            .sqrt()
    }

    /// Smallest singular value.
    pub fn min_singular_value(&self) -> T {
        let gram = self.transpose().mul(self);
        gram.symmetric_eigenvalues()
            .first()
            .copied()
            .unwrap_or_else(T::zero)
            .max(T::zero())
            .sqrt()
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
pub fn norm<T: Real>(v: &[T]) -> T {
    // hypot-style scaling keeps huge blow-up states from overflowing early
    let scale = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|&x| (x / scale) * (x / scale)).sum::<T>().sqrt()
}

pub fn add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scale<T: Real>(a: &[T], s: T) -> Vec<T> {
    a.iter().map(|&x| x * s).collect()
}

/// `a + s * b`
pub fn axpy<T: Real>(a: &[T], s: T, b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + s * y).collect()
}

pub fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    norm(&sub(a, b))
}

pub fn all_finite<T: Real>(v: &[T]) -> bool {
    v.iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_solve() {
        let a = Mat::<f64>::from_f64_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert!((a.det() - 5.0).abs() < 1e-14);
        let x = a.solve(&[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
        let s = Mat::<f64>::from_f64_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(s.det(), 0.0);
        assert!(s.solve(&[1.0, 1.0]).is_none());
    }

    #[test]
    fn op_norm_of_rotation_and_diagonal() {
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let r = Mat::<f64>::from_f64_rows(&[vec![c, -s], vec![s, c]]).unwrap();
        assert!((r.op_norm() - 1.0).abs() < 1e-14);
        let d = Mat::<f64>::from_f64_rows(&[vec![3.0, 0.0], vec![0.0, -5.0]]).unwrap();
        assert!((d.op_norm() - 5.0).abs() < 1e-13);
        assert!((d.min_singular_value() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Mat::<f64>::from_f64_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn norm_does_not_overflow() {
        let v = [1e200f64, 1e200];
        assert!((norm(&v) / 1e200 - 2f64.sqrt()).abs() < 1e-15);
    }
}
