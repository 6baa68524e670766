//! Configuration, experiment pipeline, artifacts and CSV exports.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod export;
pub mod pipeline;

pub use artifact::{ArchiveEntry, RunArtifact, ARTIFACT_SUFFIX, SCHEMA_VERSION};
pub use commands::{cmd_convergence, cmd_evaluate, cmd_run, cmd_sweep, load_config};
pub use config::{CriterionChoice, CriterionKind, CsvData, DataSource, RunConfig, SweepConfig, SyntheticData, TauDetection};
pub use pipeline::{execute, prepare, resolve_criteria, run_experiment, Prepared};
