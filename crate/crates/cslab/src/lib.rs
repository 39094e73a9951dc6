//! Std companion to `cslab-core`: parallel ensemble drivers, JSON and CSV
//! output, and the `cslab` command-line interface.

pub mod cli;
pub mod output;
pub mod parallel;

pub use cli::run;
