//! Configuration-driven verification-suite runner.
//!
//! Wraps the library's identity checks into reproducible, machine-readable
//! reports: a fixed `(config, seed)` pair produces byte-identical output.

pub mod config;
pub mod report;
pub mod suites;

pub use config::{ConfigError, SuiteConfig, SuiteId};
pub use report::{emit_report, CheckResult, Expectation, Format};
pub use suites::run_suite;
