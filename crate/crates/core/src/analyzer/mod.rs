//! Sampling-based audits of the well-posedness hypotheses, aggregated into a
//! theorem-applicability report.

pub mod grid;
pub mod probes;
pub mod report;

pub use grid::{AnalyzerOptions, ProbeGrid};
pub use probes::{
    analyze, check_determinant, check_fibre_convexity, check_fibre_nonempty, check_growth, check_lipschitz_upper,
    check_local_injectivity, check_lower_lipschitz, check_monotonicity, estimate_lipschitz_pair,
    probe_radial_unboundedness, refine_report, verify_witness, LipschitzEstimate,
};
pub use report::{
    theorem_applicability, AnalysisReport, CheckName, CheckRecord, StructureFlags, Theorem, TheoremTag, Verdict, Witness,
};
