//! Read-only view over a directory of run artifacts: list runs, order a
//! front, inspect a solution and assemble row combinations.
//!
//! Every operation is a pure function of the loaded artifacts and the
//! request, which makes the HTTP layer a thin wrapper.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines;
use crate::criteria::{self, CriterionSpec};
use crate::evaluation::{self, EvaluationError, Pick, Sir};
use crate::harness::{RunArtifact, ARTIFACT_SUFFIX};
use crate::signal::{self, SeparationMatrix, SignalMatrix};

#[derive(Debug, Error)]
pub enum ExplorerError {
    #[error("run `{0}` not found")]
    NotFound(String),
    #[error("run `{id}` could not be loaded: {reason}")]
    Unavailable { id: String, reason: String },
    #[error("index {index} out of range (front has {len} solutions)")]
    OutOfRange { index: usize, len: usize },
    #[error("invalid request: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Internal(String),
}

pub type Result<T, E = ExplorerError> = std::result::Result<T, E>;

fn internal(e: impl std::fmt::Display) -> ExplorerError {
    ExplorerError::Internal(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Ok,
    LoadError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub id: String,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solutions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criteria: Option<Vec<CriterionSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detected_tau: Option<usize>,
    pub has_sources: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEntry {
    pub index: usize,
    pub objectives: Vec<f64>,
    pub penalized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Front {
    pub run: String,
    pub order_by: usize,
    pub criteria: Vec<CriterionSpec>,
    pub entries: Vec<FrontEntry>,
    /// Objectives of the supervised MSE solution, when sources are stored.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionView {
    /// Archive index; `None` for a composite.
    pub index: Option<usize>,
    pub objectives: Vec<f64>,
    pub penalized: bool,
    pub w: SeparationMatrix,
    pub estimates: SignalMatrix,
    /// Original sample index of every returned sample.
    pub sample_index: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sir: Option<Vec<Sir>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationRequest {
    pub picks: Vec<Pick>,
    #[serde(default)]
    pub max_points: Option<usize>,
}

#[derive(Debug)]
struct RunEntry {
    id: String,
    loaded: std::result::Result<RunArtifact, String>,
}

#[derive(Debug, Default)]
pub struct Explorer {
    runs: Vec<RunEntry>,
}

impl Explorer {
    /// Loads every `*.artifact.json` in `dir`; files that fail to parse are
    /// kept and reported with a load-error status.
    pub fn open(dir: &Path) -> Result<Self> {
        let read = std::fs::read_dir(dir).map_err(|source| ExplorerError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut files: Vec<(String, PathBuf)> = Vec::new();
        for entry in read {
            let entry = entry.map_err(|source| ExplorerError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if let Some(id) = name.strip_suffix(ARTIFACT_SUFFIX) {
                files.push((id.to_string(), entry.path()));
            }
        }
        files.sort();
        let runs = files
            .into_iter()
            .map(|(id, path)| RunEntry {
                id,
                loaded: RunArtifact::read(&path).map_err(|e| e.to_string()),
            })
            .collect();
        Ok(Explorer { runs })
    }

    pub fn from_artifacts(artifacts: Vec<(String, RunArtifact)>) -> Self {
        Explorer {
            runs: artifacts
                .into_iter()
                .map(|(id, a)| RunEntry { id, loaded: Ok(a) })
                .collect(),
        }
    }

    pub fn list_runs(&self) -> Vec<RunSummary> {
        self.runs
            .iter()
            .map(|r| match &r.loaded {
                Ok(a) => RunSummary {
                    id: r.id.clone(),
                    status: RunStatus::Ok,
                    error: None,
                    solutions: Some(a.final_archive.len()),
                    criteria: Some(a.criteria.clone()),
                    detected_tau: a.detected_tau,
                    has_sources: a.sources.is_some(),
                },
                Err(e) => RunSummary {
                    id: r.id.clone(),
                    status: RunStatus::LoadError,
                    error: Some(e.clone()),
                    solutions: None,
                    criteria: None,
                    detected_tau: None,
                    has_sources: false,
                },
            })
            .collect()
    }

    pub fn artifact(&self, id: &str) -> Result<&RunArtifact> {
        let entry = self
            .runs
            .iter()
            .find(|r| r.id == id)
            .ok_or_else(|| ExplorerError::NotFound(id.to_string()))?;
        entry.loaded.as_ref().map_err(|reason| ExplorerError::Unavailable {
            id: id.to_string(),
            reason: reason.clone(),
        })
    }

    /// Front sorted ascending (stable) by objective `order_by`.
    pub fn get_front(&self, id: &str, order_by: usize) -> Result<Front> {
        let a = self.artifact(id)?;
        if order_by >= a.criteria.len() {
            return Err(ExplorerError::Invalid(vec![format!(
                "order_by {order_by} out of range ({} criteria)",
                a.criteria.len()
            )]));
        }
        let objectives: Vec<Vec<f64>> = a.final_archive.iter().map(|e| e.objectives.clone()).collect();
        let ordering = if objectives.is_empty() {
            Vec::new()
        } else {
            evaluation::order_members(&objectives, order_by).map_err(internal)?
        };
        let entries = ordering
            .into_iter()
            .map(|i| FrontEntry {
                index: i,
                objectives: a.final_archive[i].objectives.clone(),
                penalized: a.final_archive[i].penalized,
            })
            .collect();
        let mse = match &a.sources {
            Some(s) => {
                let w = baselines::mse_solution(s, &a.mixtures).map_err(internal)?.w;
                Some(
                    criteria::evaluate_with(&w, &a.mixtures, &a.criteria, &a.config.feasibility)
                        .map_err(internal)?
                        .values,
                )
            }
            None => None,
        };
        Ok(Front {
            run: id.to_string(),
            order_by,
            criteria: a.criteria.clone(),
            entries,
            mse,
        })
    }

    pub fn get_solution(&self, id: &str, index: usize, max_points: Option<usize>) -> Result<SolutionView> {
        let a = self.artifact(id)?;
        let len = a.final_archive.len();
        if index >= len {
            return Err(ExplorerError::OutOfRange { index, len });
        }
        let w = a.matrix(index).map_err(internal)?;
        let e = &a.final_archive[index];
        view(a, Some(index), w, e.objectives.clone(), e.penalized, max_points)
    }

    /// Composite of the picked rows; objectives are recomputed with the
    /// run's criteria. Nothing is stored.
    pub fn post_combination(&self, id: &str, request: &CombinationRequest) -> Result<SolutionView> {
        let a = self.artifact(id)?;
        let matrices = a.matrices().map_err(internal)?;
        let w = evaluation::user_combine(&matrices, &request.picks).map_err(|e| match e {
            EvaluationError::InvalidPicks(p) => ExplorerError::Invalid(p),
            EvaluationError::EmptyArchive => ExplorerError::Invalid(vec!["run has no solutions".to_string()]),
            other => internal(other),
        })?;
        let obj = criteria::evaluate_with(&w, &a.mixtures, &a.criteria, &a.config.feasibility).map_err(internal)?;
        view(a, None, w, obj.values, obj.penalized, request.max_points)
    }
}

fn view(
    a: &RunArtifact,
    index: Option<usize>,
    w: SeparationMatrix,
    objectives: Vec<f64>,
    penalized: bool,
    max_points: Option<usize>,
) -> Result<SolutionView> {
    let estimates = signal::separate(&a.mixtures, &w).map_err(internal)?;
    let sir = match &a.sources {
        Some(s) => Some(
            evaluation::score_solution(&w, s, &a.mixtures)
                .map_err(internal)?
                .sir
                .into_iter()
                .map(Sir)
                .collect(),
        ),
        None => None,
    };
    let (estimates, sample_index) = match max_points {
        Some(m) => decimate(&estimates, m)?,
        None => {
            let t = estimates.samples();
            (estimates, (0..t).collect())
        }
    };
    Ok(SolutionView {
        index,
        objectives,
        penalized,
        w,
        estimates,
        sample_index,
        sir,
    })
}

/// Min/max decimation: each block of `stride` samples contributes its
/// extreme samples in time order, so peaks move by less than one stride.
pub fn decimate(m: &SignalMatrix, max_points: usize) -> Result<(SignalMatrix, Vec<usize>)> {
    if max_points < 2 {
        return Err(ExplorerError::Invalid(vec![format!(
            "max_points {max_points} must be at least 2"
        )]));
    }
    let t = m.samples();
    if t <= max_points {
        return Ok((m.clone(), (0..t).collect()));
    }
    let blocks = max_points / 2;
    let stride = t.div_ceil(blocks);
    let mut keep = Vec::with_capacity(max_points);
    for start in (0..t).step_by(stride) {
        let end = (start + stride).min(t);
        let mut picks = Vec::new();
        for row in m.rows() {
            let block = &row[start..end];
            let (mut lo, mut hi) = (0, 0);
            for (k, v) in block.iter().enumerate() {
                if *v < block[lo] {
                    lo = k;
                }
                if *v > block[hi] {
                    hi = k;
                }
            }
            picks.push(start + lo);
            picks.push(start + hi);
        }
        picks.sort_unstable();
        picks.dedup();
        keep.extend(picks);
    }
    // With several channels a block may contribute more than two samples.
    if keep.len() > max_points {
        let step = keep.len() as f64 / max_points as f64;
        keep = (0..max_points).map(|i| keep[(i as f64 * step) as usize]).collect();
    }
    if keep.len() < 2 {
        keep = vec![0, t - 1];
    }
    let rows = m
        .rows()
        .iter()
        .map(|r| keep.iter().map(|&k| r[k]).collect())
        .collect();
    let out = SignalMatrix::new(m.labels().to_vec(), rows).map_err(internal)?;
    Ok((out, keep))
}
