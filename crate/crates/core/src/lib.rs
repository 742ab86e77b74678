//! Building blocks for a tabular cardiovascular-risk benchmark.
//!
//! The crate covers the whole modelling path for the public cardio
//! checkup dataset: CSV ingestion and schema checks ([`ingest`]),
//! cleaning, imputation, encoding and stratified splitting
//! ([`preprocess`]), classical hypothesis tests ([`stats`]), six
//! natively implemented classifiers ([`learners`]), discrimination and
//! calibration metrics ([`metrics`]), cross-validated hyperparameter
//! search ([`tuning`]) and model-agnostic attribution ([`explain`]).

pub mod error;
pub mod explain;
pub mod frame;
pub mod ingest;
pub mod learners;
pub mod metrics;
pub mod preprocess;
pub mod special;
pub mod stats;
pub mod tuning;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use frame::{FeatureFrame, Matrix, OneHotGroup, Scaler};
