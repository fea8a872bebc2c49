//! Command-line front end for `invcheck-core`: file formats, parallel
//! checking and the `invcheck` binary's commands.

pub mod check;
pub mod cli;
pub mod formats;
