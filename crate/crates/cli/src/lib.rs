//! Suite configuration, orchestration and report output for the `ccl`
//! binary.

pub mod config;
pub mod emit;
pub mod suite;

pub use config::{CheckName, ConfigError, Format, SuiteConfig};
pub use emit::{emit_report, emit_sweep};
pub use suite::{run_suite, run_sweep};
