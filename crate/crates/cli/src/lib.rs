//! Command implementations behind the `relpose` binary.

pub mod commands;
pub mod config;
pub mod dataset;
