//! Library behind the `fase` command: PGM handling, dictionary specs and
//! the conceal, verify, bench, tables and mask commands.

pub mod bench;
pub mod conceal;
pub mod error;
pub mod maskgen;
pub mod pgm;
pub mod spec;
pub mod tables;
pub mod verify;

pub use error::{CliError, Result};
