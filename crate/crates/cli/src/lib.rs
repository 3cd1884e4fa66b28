//! Configuration, file formats and command implementations for the
//! `sldesign` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod model;

pub use config::{preset, Resolved, RunConfig, PRESETS};
pub use error::CliError;
