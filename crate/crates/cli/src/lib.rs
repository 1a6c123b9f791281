//! Command-line front end for the `peai` library.

pub mod commands;
pub mod diag;
pub mod io;

pub use commands::{run, Cli};
