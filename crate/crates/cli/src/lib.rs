//! Command-line front end and benchmark harness for `varlp`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod commands;
pub mod error;
pub mod model;

pub use error::{CliError, CliResult};
