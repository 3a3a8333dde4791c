//! Config-driven front end for the causal sensitivity bound library.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;

pub use commands::run;
pub use config::RunConfig;
pub use error::CliError;
