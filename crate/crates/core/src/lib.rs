//! Multi-objective blind source separation.
//!
//! Mixtures `x = A s + r` are separated by a matrix `W` whose rows are
//! optimised jointly under several separation criteria with SPEA2. The
//! result is a set of non-dominated separation matrices that can be ordered,
//! inspected and recombined.

pub mod baselines;
pub mod criteria;
mod error;
pub mod evaluation;
pub mod explorer;
pub mod harness;
pub mod signal;
pub mod spea2;

pub use criteria::{CriterionSpec, Feasibility, ObjectiveVector};
pub use error::{Error, Result};
pub use harness::{RunArtifact, RunConfig};
pub use signal::{MixingConfig, SeparationMatrix, SignalMatrix};
pub use spea2::EngineConfig;
