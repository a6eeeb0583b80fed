pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod scenario;

pub use error::{CliError, Result};
