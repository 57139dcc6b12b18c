//! Command-line front end: file formats, configuration and subcommands.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod events;
pub mod files;

pub use commands::{run, Cli, Command, Outcome};
pub use error::{CliError, Result};
