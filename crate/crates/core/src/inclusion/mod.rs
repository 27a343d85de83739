//! Set-valued output fibres: selection policies, inclusion integration and
//! convexity of fibre images.

pub mod convexity;
pub mod policy;
pub mod simulate;

pub use convexity::{check_a3_convexity, ConvexityVerdict, ConvexityWitness};
pub use policy::{select_from_fibre, Selection, SelectionPolicy};
pub use simulate::{compute_fibre, simulate_inclusion, FibreMode, InclusionMethod, InclusionOptions};
