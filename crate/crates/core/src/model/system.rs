//! The linear part `(A, B, B_e, C, D, D_e)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::scalar::Real;

/// State, input, exogenous-input and output dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    pub me: usize,
    pub p: usize,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
struct RawMatrices<T> {
    #[serde(rename = "A")]
    a: Mat<T>,
    #[serde(rename = "B")]
    b: Mat<T>,
    #[serde(rename = "B_e")]
    be: Mat<T>,
    #[serde(rename = "C")]
    c: Mat<T>,
    #[serde(rename = "D")]
    d: Mat<T>,
    #[serde(rename = "D_e")]
    de: Mat<T>,
}

/// Validated sextuple of conforming, finite matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrices<T>", into = "RawMatrices<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct SystemMatrices<T> {
    a: Mat<T>,
    b: Mat<T>,
    be: Mat<T>,
    c: Mat<T>,
    d: Mat<T>,
    de: Mat<T>,
    dims: Dims,
}

impl<T: Real> TryFrom<RawMatrices<T>> for SystemMatrices<T> {
    type Error = Error;
    fn try_from(r: RawMatrices<T>) -> Result<Self> {
        SystemMatrices::new(r.a, r.b, r.be, r.c, r.d, r.de)
    }
}

impl<T: Real> From<SystemMatrices<T>> for RawMatrices<T> {
    fn from(s: SystemMatrices<T>) -> Self {
        RawMatrices {
            a: s.a,
            b: s.b,
            be: s.be,
            c: s.c,
            d: s.d,
            de: s.de,
        }
    }
}

fn expect_shape<T: Real>(name: &str, m: &Mat<T>, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::dim(
            name,
            format!("{rows}x{cols}"),
            format!("{}x{}", m.rows(), m.cols()),
        ));
    }
    if !m.is_finite() {
        return Err(Error::Config(format!("matrix {name} has non-finite entries")));
    }
    Ok(())
}

impl<T: Real> SystemMatrices<T> {
    /// Dimensions are read off `A` (n), `B` (m), `B_e` (m_e) and `C` (p);
    /// every matrix is then checked against them.
    pub fn new(a: Mat<T>, b: Mat<T>, be: Mat<T>, c: Mat<T>, d: Mat<T>, de: Mat<T>) -> Result<Self> {
        let dims = Dims {
            n: a.rows(),
            m: b.cols(),
            me: be.cols(),
            p: c.rows(),
        };
        if dims.n == 0 || dims.m == 0 || dims.me == 0 || dims.p == 0 {
            return Err(Error::Config(format!(
                "all dimensions must be positive, got n={}, m={}, m_e={}, p={}",
                dims.n, dims.m, dims.me, dims.p
            )));
        }
        expect_shape("A", &a, dims.n, dims.n)?;
        expect_shape("B", &b, dims.n, dims.m)?;
        expect_shape("B_e", &be, dims.n, dims.me)?;
        expect_shape("C", &c, dims.p, dims.n)?;
        expect_shape("D", &d, dims.p, dims.m)?;
        expect_shape("D_e", &de, dims.p, dims.me)?;
        Ok(Self { a, b, be, c, d, de, dims })
    }

    /// Build from nested `f64` rows.
    pub fn from_rows(
        a: &[Vec<f64>],
        b: &[Vec<f64>],
        be: &[Vec<f64>],
        c: &[Vec<f64>],
        d: &[Vec<f64>],
        de: &[Vec<f64>],
    ) -> Result<Self> {
        Self::new(
            Mat::from_f64_rows(a)?,
            Mat::from_f64_rows(b)?,
            Mat::from_f64_rows(be)?,
            Mat::from_f64_rows(c)?,
            Mat::from_f64_rows(d)?,
            Mat::from_f64_rows(de)?,
        )
    }

    pub fn cast<U: Real>(&self) -> SystemMatrices<U> {
        SystemMatrices {
            a: self.a.cast(),
            b: self.b.cast(),
            be: self.be.cast(),
            c: self.c.cast(),
            d: self.d.cast(),
            de: self.de.cast(),
            dims: self.dims,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn a(&self) -> &Mat<T> {
        &self.a
    }
    pub fn b(&self) -> &Mat<T> {
        &self.b
    }
    pub fn be(&self) -> &Mat<T> {
        &self.be
    }
    pub fn c(&self) -> &Mat<T> {
        &self.c
    }
    pub fn d(&self) -> &Mat<T> {
        &self.d
    }
    pub fn de(&self) -> &Mat<T> {
        &self.de
    }

    /// Right-hand side of the output equation, `C x + D_e v`.
    pub fn output_target(&self, x: &[T], v: &[T]) -> Vec<T> {
        linalg::add(&self.c.mul_vec(x), &self.de.mul_vec(v))
    }

    /// State derivative `A x + B u + B_e v`.
    pub fn state_rhs(&self, x: &[T], u: &[T], v: &[T]) -> Vec<T> {
        let mut r = self.a.mul_vec(x);
        for (ri, bi) in r.iter_mut().zip(self.b.mul_vec(u)) {
            *ri += bi;
        }
        for (ri, ei) in r.iter_mut().zip(self.be.mul_vec(v)) {
            *ri += ei;
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrong_width_of_c_is_named() {
        let e = SystemMatrices::<f64>::from_rows(
            &[vec![1.0, 0.0], vec![0.0, 0.0]],
            &[vec![0.0], vec![1.0]],
            &[vec![0.0], vec![1.0]],
            &[vec![1.0, 0.0, 0.0]],
            &[vec![1.0]],
            &[vec![1.0]],
        )
        .unwrap_err();
        match e {
            Error::Dimension { name, expected, actual } => {
                assert_eq!(name, "C");
                assert_eq!(expected, "1x2");
                assert_eq!(actual, "1x3");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_finite_rejected() {
        let r = SystemMatrices::<f64>::from_rows(
            &[vec![f64::NAN]],
            &[vec![1.0]],
            &[vec![1.0]],
            &[vec![1.0]],
            &[vec![1.0]],
            &[vec![1.0]],
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
