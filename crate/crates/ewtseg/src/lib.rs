//! File formats and command-line pipeline around [`ewtseg_core`].

pub mod cli;
pub mod commands;
pub mod config;
mod error;
pub mod persist;
pub mod pnm;
pub mod tensor_io;

pub use error::{CliError, CliResult};
