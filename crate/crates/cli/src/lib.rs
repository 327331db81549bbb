//! File formats, run configurations, reports and pipelines for the `reslab`
//! command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod report;
pub mod svg;

pub use error::CliError;
