//! Command-line front end for `essbasis-core`: BVS vector files in, key/value
//! reports out.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvs;
pub mod commands;
pub mod report;

pub use commands::{run, run_args, Cli, CliError, Command, Outcome};
