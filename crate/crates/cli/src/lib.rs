//! Experiment harness behind the `fogswipt` binary: run configuration,
//! seeded sweeps over the fixed and optimized offloading-time designs, and
//! CSV output.

pub mod config;
pub mod experiment;
pub mod output;
