use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::criteria::{CriterionSpec, ObjectiveVector};
use crate::error::{Error, Result};
use crate::evaluation::Member;
use crate::signal::{SeparationMatrix, SignalMatrix};
use crate::spea2::{Snapshot, Timings};

pub const SCHEMA_VERSION: &str = "mobss-artifact/1";

/// File suffix the explorer looks for.
pub const ARTIFACT_SUFFIX: &str = ".artifact.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub genome: Vec<f64>,
    pub objectives: Vec<f64>,
    pub penalized: bool,
}

impl ArchiveEntry {
    pub fn objective_vector(&self) -> ObjectiveVector {
        ObjectiveVector {
            values: self.objectives.clone(),
            penalized: self.penalized,
        }
    }
}

/// Self-describing record of one optimisation run.
///
/// Floats are written with shortest round-trip formatting, so reading and
/// re-writing an artifact reproduces it byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunArtifact {
    pub schema_version: String,
    pub config: RunConfig,
    pub criteria: Vec<CriterionSpec>,
    pub detected_tau: Option<usize>,
    pub mixtures: SignalMatrix,
    #[serde(default)]
    pub sources: Option<SignalMatrix>,
    pub final_archive: Vec<ArchiveEntry>,
    pub snapshots: Vec<Snapshot>,
    pub timings: Timings,
}

impl RunArtifact {
    pub fn channels(&self) -> usize {
        self.mixtures.channels()
    }

    pub fn matrix(&self, index: usize) -> Result<SeparationMatrix> {
        let n = self.channels();
        Ok(SeparationMatrix::from_genome(&self.final_archive[index].genome, n, n)?)
    }

    pub fn matrices(&self) -> Result<Vec<SeparationMatrix>> {
        (0..self.final_archive.len()).map(|i| self.matrix(i)).collect()
    }

    pub fn members(&self) -> Result<Vec<Member>> {
        self.final_archive
            .iter()
            .enumerate()
            .map(|(i, e)| {
                Ok(Member {
                    w: self.matrix(i)?,
                    objectives: e.objectives.clone(),
                })
            })
            .collect()
    }

    /// Copy with every timing set to zero, for reproducibility comparisons.
    pub fn without_timings(&self) -> RunArtifact {
        RunArtifact {
            timings: self.timings.zeroed(),
            ..self.clone()
        }
    }

    pub fn check(&self) -> Result<()> {
        let mut v = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            v.push(format!(
                "schema_version: `{}` (expected `{SCHEMA_VERSION}`)",
                self.schema_version
            ));
        }
        let n = self.channels();
        let k = self.criteria.len();
        if let Some(s) = &self.sources {
            if s.samples() != self.mixtures.samples() || s.channels() != n {
                v.push(format!(
                    "sources: {}x{} incompatible with mixtures {}x{}",
                    s.channels(),
                    s.samples(),
                    n,
                    self.mixtures.samples()
                ));
            }
        }
        for (i, e) in self.final_archive.iter().enumerate() {
            if e.genome.len() != n * n {
                v.push(format!("final_archive[{i}].genome: length {} != {}", e.genome.len(), n * n));
            }
            if e.objectives.len() != k {
                v.push(format!("final_archive[{i}].objectives: length {} != {k}", e.objectives.len()));
            }
        }
        if self.snapshots.windows(2).any(|w| w[0].iteration >= w[1].iteration) {
            v.push("snapshots: not ordered by iteration".to_string());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let a: RunArtifact =
            serde_json::from_str(text).map_err(|e| Error::validation(format!("artifact: {e}")))?;
        a.check()?;
        Ok(a)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Validation(v) => Error::Format {
                path: path.display().to_string(),
                message: v.join("; "),
            },
            other => other,
        })
    }
}
