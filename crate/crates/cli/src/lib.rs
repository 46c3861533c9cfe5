//! Command-line front end: every subcommand resolves a [`config::RunConfig`]
//! and hands it to the library.

pub mod commands;
pub mod config;

pub use commands::{run, Outcome, Table};
pub use config::{Cli, Command, RunConfig};
