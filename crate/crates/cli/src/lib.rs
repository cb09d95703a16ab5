//! Experiment runner for the transform x classifier benchmark grid: assay
//! ingestion, seeded splitting, grid execution and report emission.

pub mod config;
pub mod error;
pub mod ingest;
pub mod report;
pub mod runner;
pub mod split;

pub use config::{DataSource, ExperimentConfig, Preset};
pub use error::{Error, Result};
pub use report::{emit_report, emit_tables, Format};
pub use runner::{run_experiment, run_on_dataset, ReportSet};
