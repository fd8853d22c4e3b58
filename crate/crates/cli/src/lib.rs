//! Command line front end for `udk_core`.
//!
//! JSON documents carry `"schema": 1`. Exit codes: 0 success, 2 invalid
//! input, 3 size cap exceeded, 4 experiment failed its check.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod io;
pub mod rho;

pub use cli::{run, Cli};
pub use error::{CliError, CliResult};
