//! Configuration, orchestration and output for the `mpemba` binary.

pub mod build;
pub mod config;
pub mod output;
pub mod run;
pub mod validate;
