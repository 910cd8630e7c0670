//! Scenario configuration, runs, output files and verification suites for
//! the cohesive-zone DG solver.

pub mod analysis;
pub mod config;
pub mod output;
pub mod run;
pub mod scenario;
pub mod verify;
