//! File formats, parallel backtests and the `tvpsv` command line around
//! [`tvpsv_core`].

pub mod backtest;
pub mod cli;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod report;
pub mod store;

pub use error::{Error, Result};

/// Crate version with the git revision it was built from, when known.
pub const VERSION: &str = env!("TVPSV_VERSION");
