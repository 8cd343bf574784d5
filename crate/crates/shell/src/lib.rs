//! Operational layer of covshift: dataset and checkpoint persistence,
//! experiment configs, SVG plots, the end-to-end pipelines and the CLI.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod plot;

pub use error::{Result, ShellError};
