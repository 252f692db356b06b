//! Library side of the `bclab` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod mesh;
pub mod output;
pub mod surfaces;

pub use commands::{run, Outcome};
pub use error::{CliError, CliResult};
