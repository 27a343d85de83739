//! System model: matrices, nonlinearity and exogenous input.

pub mod builtins;
pub mod expr;
pub mod input;
pub mod nonlinearity;
pub mod piecewise;
pub mod system;
pub mod timefn;

use serde::{Deserialize, Serialize};

pub use builtins::{Builtin, Gain};
pub use input::InputSignal;
pub use nonlinearity::{ExpressionDesc, Nonlinearity, NonlinearityDesc, NonlinearityKind};
pub use piecewise::{Coef, Piece, PiecewiseRadial, PiecewiseScalar};
pub use system::{Dims, SystemMatrices};
pub use timefn::TimeFunction;

use crate::error::{Error, Result};

/// A complete forced Lur'e system: linear part, nonlinearity and input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LureSystem {
    pub matrices: SystemMatrices<f64>,
    pub nonlinearity: Nonlinearity,
    pub input: InputSignal,
}

impl LureSystem {
    pub fn new(matrices: SystemMatrices<f64>, nonlinearity: Nonlinearity, input: InputSignal) -> Result<Self> {
        let s = Self {
            matrices,
            nonlinearity,
            input,
        };
        s.check()?;
        Ok(s)
    }

    /// Cross-check the dimensions of the three parts.
    pub fn check(&self) -> Result<()> {
        let d = self.matrices.dims();
        if self.nonlinearity.p() != d.p {
            return Err(Error::dim("nonlinearity input dimension (p)", d.p, self.nonlinearity.p()));
        }
        if self.nonlinearity.m() != d.m {
            return Err(Error::dim("nonlinearity output dimension (m)", d.m, self.nonlinearity.m()));
        }
        self.input.validate()?;
        if self.input.dim() != d.me {
            return Err(Error::dim("input dimension (m_e)", d.me, self.input.dim()));
        }
        Ok(())
    }
}
