//! Simulation and well-posedness auditing for forced Lur'e systems with
//! feedthrough:
//!
//! ```text
//! x' = A x + B f(t, y) + B_e v(t)
//! y  = C x + D f(t, y) + D_e v(t)
//! ```
//!
//! The output equation is implicit in `y` whenever `D != 0`; it is solved at
//! every stage through the map `F_t(xi) = xi - D f(t, xi)`.

pub mod analyzer;
pub mod catalog;
pub mod config;
pub mod derivative;
pub mod error;
pub mod gronwall;
pub mod inclusion;
pub mod integrator;
pub mod io;
pub mod linalg;
pub mod model;
pub mod output;
pub mod sampling;
pub mod scalar;

pub use error::{Error, Result};
pub use linalg::Mat;
pub use model::{
    Builtin, Coef, Dims, Gain, InputSignal, LureSystem, Nonlinearity, NonlinearityDesc,
    NonlinearityKind, Piece, PiecewiseRadial, PiecewiseScalar, SystemMatrices, TimeFunction,
};
pub use scalar::Real;

/// Double-precision system matrices.
pub type Matrices = SystemMatrices<f64>;
/// Single-precision system matrices.
pub type Matrices32 = SystemMatrices<f32>;
