//! Integration of the eliminated state equation with termination
//! classification.

pub mod escape;
pub mod record;
pub mod reference;
pub(crate) mod rk;
pub mod simulate;

pub use escape::{refine_escape_time, EscapeEstimate};
pub use record::{RunStats, RunSummary, Termination, TerminationKind, TrajectoryRecord};
pub use reference::{compare_to_reference, ErrorMetrics};
pub use simulate::{simulate, Method, SimOptions};
