//! Verification checks. Each check returns a [`VerificationReport`];
//! failures of the inequality under test are reported, never raised.

pub mod audits;
pub mod checks;
pub mod contact;
pub mod report;

pub use audits::{det_comparison_audit, sqrt_perturbation_audit};
pub use checks::*;
pub use contact::{direction_sweep, first_contact, ContactPoint, ContactRecord};
pub use report::{Context, Sense, VerificationReport};
