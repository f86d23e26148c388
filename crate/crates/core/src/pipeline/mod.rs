//! Config-driven orchestration of the synthetic experiment and its artifacts.

pub mod config;
pub mod export;
pub mod run;

pub use config::{RunConfig, Violation};
pub use run::{run_pipeline, run_stages, strength_dir, RunSummary, Stage, StrengthSummary};
