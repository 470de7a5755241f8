//! Data ingestion, report generation and the `lvdyn` command line for the
//! two-species Lotka-Volterra analysis in `lvdyn-core`.
//!
//! The pipeline loads an annual series, fits (or injects) the parameters,
//! classifies the interaction, locates and classifies the equilibria, samples
//! the phase plane, scores the fit, checks convergence and runs the Sobol'
//! sensitivity analysis, collecting everything into one [`report::Report`].

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod export;
pub mod fixtures;
pub mod pipeline;
pub mod report;

pub use config::AnalysisConfig;
pub use error::{CliError, CliResult, Stage};
pub use fixtures::Subsystem;
pub use pipeline::{analyze, run_pipeline, Analysis, PipelineFailure};
pub use report::Report;
