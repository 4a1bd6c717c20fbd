//! Command-line front end and file formats for `vstdecon-core`.
//!
//! The binary is a thin wrapper over [`cli::Cli`]; everything it does is
//! also reachable through [`commands`] for scripted use.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod spec;

pub use error::{Error, Result};
