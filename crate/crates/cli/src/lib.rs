//! Scenario runner for `mavol-core`: JSON configs in, CSV and JSON reports
//! out, with the numerical invariants of each scenario enforced as gates.

pub mod app;
pub mod catalog;
pub mod config;
pub mod report;
pub mod runner;
