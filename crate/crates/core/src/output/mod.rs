//! The implicit output equation `F_t(y) = C x + D_e v`.

pub mod fibre;
pub mod oracle;
pub mod solver;

pub use fibre::{enumerate_fibre_exact, supports_exact, FibreElement, FibreSet, Segment, Shell};
pub use oracle::brute_force_fibre_oracle;
pub use solver::{
    enumerate_fibre_multistart, output_residual, solve_output, NoSolutionCertificate, OutputSolution,
    SolveOptions, SolveStatus,
};
