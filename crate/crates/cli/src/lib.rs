//! Configuration, output writers and subcommands for the `mhdpp` binary.

pub mod commands;
pub mod config;
pub mod output;
