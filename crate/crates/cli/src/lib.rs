//! Configuration parsing, subcommand dispatch and file output for the `sfwm`
//! command-line tool.

pub mod config;
pub mod run;

pub use config::{parse_config, parse_config_with, ConfigError, Parsed, RunConfig};
pub use run::{run_subcommand, write_outputs, RunError};
