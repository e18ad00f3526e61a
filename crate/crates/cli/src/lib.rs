//! Command-line front end for `thermx-core`: configuration parsing, command
//! dispatch and atomic CSV/JSON output.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

pub use args::{invoke, Invocation};
pub use commands::{exit_code, run, Report};
pub use config::{parse_config, Command, RawConfig, RunConfig};
