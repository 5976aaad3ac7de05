//! Independent brute-force references and the comparison suite built on them.

pub mod dense;
pub mod reference;
pub mod suite;

pub use suite::{run_oracle_suite, OracleReport, Status, SuiteOptions};
