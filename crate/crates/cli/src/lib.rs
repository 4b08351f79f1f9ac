//! Batch front end: problem files in, JSON reports out.

pub mod commands;
pub mod problem;

pub use commands::{run, CommandError, Subcommand};
pub use problem::{InputError, Problem};
