//! The feedback nonlinearity `u = f(t, y)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::builtins::Builtin;
use super::expr::{self, Expr};
use super::piecewise::{PiecewiseRadial, PiecewiseScalar};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::scalar::{vec_to_f64, Real};

/// Expression-defined map: one string per output component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpressionDesc {
    pub p: usize,
    pub outputs: Vec<String>,
}

/// Serializable description of a nonlinearity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearityDesc {
    Builtin(Builtin),
    PiecewiseScalar(PiecewiseScalar),
    PiecewiseRadial(PiecewiseRadial),
    Expression(ExpressionDesc),
    /// `L f_inner`.
    Composed {
        left: Mat<f64>,
        inner: Box<NonlinearityDesc>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    SmoothClosedForm,
    PiecewiseScalar,
    PiecewiseRadial,
    Expression,
}

/// Validated nonlinearity, cheap to clone and share across threads.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "NonlinearityDesc", into = "NonlinearityDesc")]
pub struct Nonlinearity {
    desc: NonlinearityDesc,
    exprs: Arc<Vec<Expr>>,
    inner: Option<Arc<Nonlinearity>>,
    p: usize,
    m: usize,
}

impl PartialEq for Nonlinearity {
    fn eq(&self, other: &Self) -> bool {
        self.desc == other.desc
    }
}

impl TryFrom<NonlinearityDesc> for Nonlinearity {
    type Error = Error;
    fn try_from(desc: NonlinearityDesc) -> Result<Self> {
        Nonlinearity::new(desc)
    }
}

impl From<Nonlinearity> for NonlinearityDesc {
    fn from(n: Nonlinearity) -> Self {
        n.desc
    }
}

impl Nonlinearity {
    pub fn new(desc: NonlinearityDesc) -> Result<Self> {
        let mut exprs = Vec::new();
        let mut inner = None;
        let (p, m) = match &desc {
            NonlinearityDesc::Builtin(b) => {
                b.validate()?;
                b.dims()
            }
            NonlinearityDesc::PiecewiseScalar(pw) => {
                pw.validate()?;
                (1, 1)
            }
            NonlinearityDesc::PiecewiseRadial(r) => {
                r.validate()?;
                (r.dim, r.dim)
            }
            NonlinearityDesc::Expression(e) => {
                if e.p == 0 || e.outputs.is_empty() {
                    return Err(Error::Config(
                        "expression nonlinearity needs p >= 1 and at least one output".into(),
                    ));
                }
                for (i, s) in e.outputs.iter().enumerate() {
                    exprs.push(expr::parse(s, e.p).map_err(|err| match err {
                        Error::Parse(msg) => Error::Parse(format!("nonlinearity.outputs[{i}]: {msg}")),
                        other => other,
                    })?);
                }
                (e.p, e.outputs.len())
            }
            NonlinearityDesc::Composed { left, inner: d } => {
                let n = Nonlinearity::new((**d).clone())?;
                if left.cols() != n.m || !left.is_finite() {
                    return Err(Error::dim("composed.left columns", n.m, left.cols()));
                }
                let dims = (n.p, left.rows());
                inner = Some(Arc::new(n));
                dims
            }
        };
        Ok(Self {
            desc,
            exprs: Arc::new(exprs),
            inner,
            p,
            m,
        })
    }

    pub fn builtin(b: Builtin) -> Result<Self> {
        Self::new(NonlinearityDesc::Builtin(b))
    }

    pub fn zero(p: usize, m: usize) -> Self {
        Self::builtin(Builtin::Zero { p, m }).expect("valid zero map")
    }

    pub fn linear(k: Mat<f64>) -> Result<Self> {
        Self::builtin(Builtin::Linear { k })
    }

    pub fn piecewise_scalar(pw: PiecewiseScalar) -> Result<Self> {
        Self::new(NonlinearityDesc::PiecewiseScalar(pw))
    }

    pub fn piecewise_radial(r: PiecewiseRadial) -> Result<Self> {
        Self::new(NonlinearityDesc::PiecewiseRadial(r))
    }

    pub fn expression(p: usize, outputs: &[&str]) -> Result<Self> {
        Self::new(NonlinearityDesc::Expression(ExpressionDesc {
            p,
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        }))
    }

    /// `L f`, evaluated as the matrix product of `L` with `f(t, xi)`.
    pub fn compose_left(&self, left: Mat<f64>) -> Result<Self> {
        Self::new(NonlinearityDesc::Composed {
            left,
            inner: Box::new(self.desc.clone()),
        })
    }

    pub fn desc(&self) -> &NonlinearityDesc {
        &self.desc
    }

    /// Input dimension.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Output dimension.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kind(&self) -> NonlinearityKind {
        match &self.desc {
            NonlinearityDesc::Builtin(_) => NonlinearityKind::SmoothClosedForm,
            NonlinearityDesc::PiecewiseScalar(_) => NonlinearityKind::PiecewiseScalar,
            NonlinearityDesc::PiecewiseRadial(_) => NonlinearityKind::PiecewiseRadial,
            NonlinearityDesc::Expression(_) => NonlinearityKind::Expression,
            NonlinearityDesc::Composed { .. } => self.inner.as_ref().expect("composed").kind(),
        }
    }

    /// Piecewise-scalar structure, when available for exact fibre work.
    pub fn as_piecewise_scalar(&self) -> Option<&PiecewiseScalar> {
        match &self.desc {
            NonlinearityDesc::PiecewiseScalar(pw) => Some(pw),
            _ => None,
        }
    }

    pub fn as_piecewise_radial(&self) -> Option<&PiecewiseRadial> {
        match &self.desc {
            NonlinearityDesc::PiecewiseRadial(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_time_independent(&self) -> bool {
        match &self.desc {
            NonlinearityDesc::Builtin(b) => b.is_time_independent(),
            NonlinearityDesc::PiecewiseScalar(pw) => pw.modulator.is_constant(),
            NonlinearityDesc::PiecewiseRadial(r) => r.profile.modulator.is_constant(),
            NonlinearityDesc::Expression(_) => !self.exprs.iter().any(Expr::uses_time),
            NonlinearityDesc::Composed { .. } => {
                self.inner.as_ref().expect("composed").is_time_independent()
            }
        }
    }

    /// Evaluate `f(t, xi)`; `xi` must have length `p`.
    pub fn eval<T: Real>(&self, t: T, xi: &[T]) -> Vec<T> {
        debug_assert_eq!(xi.len(), self.p);
        match &self.desc {
            NonlinearityDesc::Builtin(b) => b.eval(t, xi),
            NonlinearityDesc::PiecewiseScalar(pw) => vec![pw.eval(t, xi[0])],
            NonlinearityDesc::PiecewiseRadial(r) => {
                let rad = linalg::norm(xi);
                if rad == T::zero() {
                    return vec![T::zero(); xi.len()];
                }
                let c = r.profile.eval(t, rad) / rad;
                xi.iter().map(|&v| c * v).collect()
            }
            NonlinearityDesc::Expression(_) => self.exprs.iter().map(|e| e.eval(t, xi)).collect(),
            NonlinearityDesc::Composed { left, .. } => {
                let inner = self.inner.as_ref().expect("composed").eval(t, xi);
                left.cast::<T>().mul_vec(&inner)
            }
        }
    }

    /// Checked evaluation: dimension of `xi` and finiteness of the result.
    pub fn try_eval<T: Real>(&self, t: T, xi: &[T]) -> Result<Vec<T>> {
        if xi.len() != self.p {
            return Err(Error::dim("xi", self.p, xi.len()));
        }
        let v = self.eval(t, xi);
        if linalg::all_finite(&v) {
            Ok(v)
        } else {
            Err(Error::Evaluation {
                t: t.as_f64(),
                point: vec_to_f64(xi),
            })
        }
    }

    /// Analytic Jacobian `m x p`, valid off the nondifferentiability set.
    /// `None` for expression nonlinearities.
    pub fn jacobian<T: Real>(&self, t: T, xi: &[T]) -> Option<Mat<T>> {
        match &self.desc {
            NonlinearityDesc::Builtin(b) => Some(b.jacobian(t, xi)),
            NonlinearityDesc::PiecewiseScalar(pw) => {
                Some(Mat::scalar(1, pw.derivative(t, xi[0])))
            }
            NonlinearityDesc::PiecewiseRadial(r) => {
                let rad = linalg::norm(xi);
                let n = xi.len();
                let dpsi = r.profile.derivative(t, rad);
                if rad == T::zero() {
                    return Some(Mat::scalar(n, dpsi));
                }
                let u: Vec<T> = xi.iter().map(|&v| v / rad).collect();
                let uu = Mat::outer(&u, &u);
                let tangential = Mat::identity(n).sub(&uu).scale(r.profile.eval(t, rad) / rad);
                Some(tangential.add(&uu.scale(dpsi)))
            }
            NonlinearityDesc::Expression(_) => None,
            NonlinearityDesc::Composed { left, .. } => {
                let j = self.inner.as_ref().expect("composed").jacobian(t, xi)?;
                Some(left.cast::<T>().mul(&j))
            }
        }
    }
}
