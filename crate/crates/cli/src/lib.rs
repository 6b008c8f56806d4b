//! The `sarv` command-line pipeline: preprocess, shard, train, eval, predict and stats.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;

pub use config::{Overrides, RunConfig};
pub use error::{CliError, Result};
