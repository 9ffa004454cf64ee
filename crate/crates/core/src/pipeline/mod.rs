//! End-to-end plumbing: run configuration, corpora on disk, model training
//! and checkpoints, and the experiment variants.

pub mod config;
pub mod data;
pub mod experiment;
pub mod grid;
pub mod models;
pub mod predictions;
pub mod report;

pub use config::RunConfig;
pub use data::{content_hash, write_corpora, Corpora, Holdout};
pub use grid::{run_da, run_srl, DaLogEntry, DaModels, DaRun, SrlLogEntry, SrlModels, SrlRun, SrlSelector, Variant};
pub use models::InputPath;
pub use report::{report_stem, write_run, RunReport, TrainingReport};
pub use predictions::{evaluate_files, EvalOptions, Task};
