//! Scenario files, machine-readable reports, and the built-in example
//! catalog behind the `twistor` binary.

pub mod catalog;
pub mod runner;
pub mod scenario;
