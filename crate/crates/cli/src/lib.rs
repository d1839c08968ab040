//! Command-line front end: TOML configuration, CSV input and output, and
//! the four run modes.

pub mod config;
pub mod csvio;
pub mod error;
pub mod run;

pub use error::{CliError, Result};
