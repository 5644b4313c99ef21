//! Command-line experiments for extended plug-in predictive densities:
//! risk curves, small-`t` derivative checks, the risk-integration identity,
//! point density evaluation, and SVG plots of the resulting CSV tables.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod table;

pub use commands::{run, Cli, Command};
pub use error::{CliError, CliResult};
