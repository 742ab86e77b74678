//! Batch pipeline for the cardio benchmark.
//!
//! A single TOML file describes an experiment: input file, cleaning rules,
//! split, learner roster and search strategies, metric and explanation
//! settings. [`run`] executes the stages in order and writes a bundle of
//! CSV and markdown tables, figure data and a `manifest.json` listing every
//! file with its SHA-256 digest.

pub mod bundle;
pub mod config;
pub mod pipeline;
pub mod spaces;
pub mod synthetic;
pub mod tables;

use std::path::PathBuf;

pub use bundle::{BundleWriter, FileEntry, Manifest};
pub use config::RunConfig;
pub use pipeline::{run, Command, Evaluated, RunOptions, RunOutcome};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),

    #[error("stage {stage} failed: {message} (partial bundle in {})", .dir.display())]
    Stage {
        stage: String,
        message: String,
        dir: PathBuf,
    },

    #[error("cannot write bundle to {}: {source}", .path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
