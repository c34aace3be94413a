//! Experiment driver: configuration, caches, grid runs and reports.

pub mod cache;
pub mod config;
pub mod output;
pub mod report;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, Overrides};
pub use report::{RunReport, Status};
pub use run::{Command, Runner};

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAILED: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
