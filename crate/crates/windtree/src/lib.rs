//! Command-line companion: configuration, commands and file formats.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
