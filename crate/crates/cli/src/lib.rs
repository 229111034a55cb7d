//! Batch front end: parse a key=value run configuration, execute a solve or
//! study on a named benchmark, and emit CSV logs plus mesh/solution
//! snapshots.

pub mod config;
pub mod drive;

pub use config::{parse_config, Mode, RunConfig};
pub use drive::{execute, CliError};
