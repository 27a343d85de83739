//! Built-in worked examples with closed-form references and expected
//! analyzer verdicts.

pub mod entries;
pub mod quad;
pub mod verify;

pub use entries::{build_example, list, CatalogEntry, Reference, ReferenceBranch, NAMES};
pub use verify::{simulate_branch, verify_entry, verify_example, VerificationReport, VerifyItem, VerifyOptions};
