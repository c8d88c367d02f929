//! Command-line companion to `capjet-core`: JSON configuration, snapshots,
//! CSV and SVG output, verification suites and parameter sweeps.

pub mod commands;
pub mod config;
pub mod eigen;
pub mod error;
pub mod output;
pub mod snapshot;
pub mod sweep;
pub mod verify;

pub use capjet_core as core;
pub use error::{CliError, Result};
