//! Command-line companion to `gazeline-core`: CSV ingestion, config
//! loading, and the simulate/track/evaluate commands.

pub mod commands;
pub mod config;
pub mod io;
