//! Command-line companion to `crmab-core`: configuration files, CSV
//! outputs, instance generation, and packaged experiments.
//!
//! The library half exists so integration tests and other tools can
//! drive the same pipeline the `crmab` binary runs.

// Validation guards are written as negated comparisons (`!(x > 0.0)`)
// on purpose: they reject NaN parameters along with out-of-range ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod generate;
pub mod output;
pub mod run;
