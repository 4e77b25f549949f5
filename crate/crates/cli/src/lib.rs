//! Configuration parsing, command dispatch and file output for the `lbfilm`
//! command-line tool.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{parse_config, parse_config_with, Command, ConfigError, RunConfig};
pub use error::CliError;
pub use run::{run, Outcome};
