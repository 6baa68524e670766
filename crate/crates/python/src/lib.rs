//! Python bindings for `mobss`.
//!
//! Signals and matrices cross the boundary as lists of rows
//! (`list[list[float]]`). Configs, artifacts and reports keep their JSON
//! schema through `to_json` / `from_json`.

use mobss::baselines;
use mobss::criteria::{self, CriterionSpec, Feasibility};
use mobss::evaluation;
use mobss::harness::{self, pipeline};
use mobss::signal::{self, MixingConfig, SeparationMatrix, SignalMatrix};
use pyo3::exceptions::{PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py<E: Into<mobss::Error>>(e: E) -> PyErr {
    let e: mobss::Error = e.into();
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn signals(rows: Vec<Vec<f64>>, prefix: &str) -> PyResult<SignalMatrix> {
    SignalMatrix::with_prefix(prefix, rows).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<SeparationMatrix> {
    SeparationMatrix::new(rows).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Experiment configuration; `RunConfig()` holds the defaults.
#[pyclass(name = "RunConfig", module = "mobss_py", from_py_object)]
#[derive(Clone)]
pub struct PyRunConfig {
    inner: harness::RunConfig,
}

#[pymethods]
impl PyRunConfig {
    #[new]
    fn new() -> Self {
        PyRunConfig {
            inner: harness::RunConfig::default(),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyRunConfig {
            inner: harness::RunConfig::from_json(text).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(PyRunConfig {
            inner: harness::RunConfig::load(&path).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Every problem with the config; empty when valid.
    fn violations(&self) -> Vec<String> {
        self.inner.violations()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.engine.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.engine.seed = seed;
    }

    #[getter]
    fn snapshot_every(&self) -> usize {
        self.inner.snapshot_every
    }

    #[setter]
    fn set_snapshot_every(&mut self, every: usize) {
        self.inner.snapshot_every = every;
    }

    fn __repr__(&self) -> String {
        format!("RunConfig(seed={})", self.inner.engine.seed)
    }
}

/// Result of one optimisation run.
#[pyclass(name = "RunArtifact", module = "mobss_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyRunArtifact {
    inner: harness::RunArtifact,
}

#[pymethods]
impl PyRunArtifact {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyRunArtifact {
            inner: harness::RunArtifact::from_json(text).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn read(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(PyRunArtifact {
            inner: harness::RunArtifact::read(&path).map_err(to_py)?,
        })
    }

    fn write(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.inner.write(&path).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn detected_tau(&self) -> Option<usize> {
        self.inner.detected_tau
    }

    /// Criterion ids in objective order, e.g. `["time-correlation", "sparsity"]`.
    #[getter]
    fn criteria(&self) -> Vec<&'static str> {
        self.inner.criteria.iter().map(|c| c.id()).collect()
    }

    #[getter]
    fn snapshots(&self) -> usize {
        self.inner.snapshots.len()
    }

    fn __len__(&self) -> usize {
        self.inner.final_archive.len()
    }

    fn objectives(&self) -> Vec<Vec<f64>> {
        self.inner.final_archive.iter().map(|e| e.objectives.clone()).collect()
    }

    fn penalized(&self) -> Vec<bool> {
        self.inner.final_archive.iter().map(|e| e.penalized).collect()
    }

    fn matrix(&self, index: usize) -> PyResult<Vec<Vec<f64>>> {
        let len = self.inner.final_archive.len();
        if index >= len {
            return Err(PyIndexError::new_err(format!("index {index} out of range ({len} members)")));
        }
        Ok(self.inner.matrix(index).map_err(to_py)?.rows().to_vec())
    }

    fn mixtures(&self) -> Vec<Vec<f64>> {
        self.inner.mixtures.rows().to_vec()
    }

    fn sources(&self) -> Option<Vec<Vec<f64>>> {
        self.inner.sources.as_ref().map(|s| s.rows().to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "RunArtifact(members={}, tau={:?})",
            self.inner.final_archive.len(),
            self.inner.detected_tau
        )
    }
}

/// SIR scores of an archive against known sources.
#[pyclass(name = "EvaluationReport", module = "mobss_py")]
pub struct PyEvaluationReport {
    inner: evaluation::EvaluationReport,
}

#[pymethods]
impl PyEvaluationReport {
    #[getter]
    fn best_index(&self) -> usize {
        self.inner.best_index
    }

    #[getter]
    fn worst_index(&self) -> usize {
        self.inner.worst_index
    }

    #[getter]
    fn ordering(&self) -> Vec<usize> {
        self.inner.ordering.clone()
    }

    /// Mean SIR per member in dB; `inf` marks perfect recovery.
    #[getter]
    fn mean_sir(&self) -> Vec<f64> {
        self.inner.mean_sir.iter().map(|s| s.db()).collect()
    }

    #[getter]
    fn per_solution_sir(&self) -> Vec<Vec<f64>> {
        self.inner
            .per_solution_sir
            .iter()
            .map(|v| v.iter().map(|s| s.db()).collect())
            .collect()
    }

    #[getter]
    fn combined_mean(&self) -> f64 {
        self.inner.combined_mean()
    }

    #[getter]
    fn mse_mean(&self) -> f64 {
        self.inner.mse.mean_sir.db()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

/// Runs one experiment in memory.
#[pyfunction]
#[pyo3(signature = (config=None, seed=None))]
fn run(py: Python<'_>, config: Option<PyRunConfig>, seed: Option<u64>) -> PyResult<PyRunArtifact> {
    let mut cfg = config.map(|c| c.inner).unwrap_or_default();
    if let Some(s) = seed {
        cfg.engine.seed = s;
    }
    cfg.validate().map_err(to_py)?;
    let artifact = py.detach(|| pipeline::run_experiment(&cfg)).map_err(to_py)?;
    Ok(PyRunArtifact { inner: artifact })
}

/// Scores the archive; sources default to those stored in the artifact.
#[pyfunction]
#[pyo3(signature = (artifact, sources=None, order_by=0))]
fn evaluate(
    py: Python<'_>,
    artifact: &PyRunArtifact,
    sources: Option<Vec<Vec<f64>>>,
    order_by: usize,
) -> PyResult<PyEvaluationReport> {
    let a = &artifact.inner;
    let sources = match sources {
        Some(rows) => signals(rows, "s")?,
        None => a
            .sources
            .clone()
            .ok_or_else(|| PyValueError::new_err("artifact has no sources; pass them explicitly"))?,
    };
    let members = a.members().map_err(to_py)?;
    let report = py
        .detach(|| evaluation::evaluate_archive(&members, &sources, &a.mixtures, order_by))
        .map_err(to_py)?;
    Ok(PyEvaluationReport { inner: report })
}

#[pyfunction]
fn time_correlation(w: Vec<Vec<f64>>, x: Vec<Vec<f64>>, lag: usize) -> PyResult<f64> {
    criteria::j_timecorr(&matrix(w)?, &signals(x, "x")?, lag).map_err(to_py)
}

#[pyfunction]
fn sparsity(w: Vec<Vec<f64>>, x: Vec<Vec<f64>>) -> PyResult<f64> {
    criteria::j_sparsity(&matrix(w)?, &signals(x, "x")?).map_err(to_py)
}

#[pyfunction]
fn decorrelation(w: Vec<Vec<f64>>, x: Vec<Vec<f64>>) -> PyResult<f64> {
    criteria::j_decorr(&matrix(w)?, &signals(x, "x")?).map_err(to_py)
}

/// Penalised objective vector `[time-correlation, sparsity]`.
#[pyfunction]
#[pyo3(signature = (w, x, lag, threshold=None, penalty=None))]
fn objectives(
    w: Vec<Vec<f64>>,
    x: Vec<Vec<f64>>,
    lag: usize,
    threshold: Option<f64>,
    penalty: Option<f64>,
) -> PyResult<(Vec<f64>, bool)> {
    let d = Feasibility::default();
    let specs = [CriterionSpec::TimeCorrelation { lag }, CriterionSpec::Sparsity];
    let v = criteria::evaluate(
        &matrix(w)?,
        &signals(x, "x")?,
        &specs,
        threshold.unwrap_or(d.threshold),
        penalty.unwrap_or(d.penalty),
    )
    .map_err(to_py)?;
    Ok((v.values.clone(), v.penalized))
}

/// Closed-form least-squares separation matrix.
#[pyfunction]
fn mse_solution(sources: Vec<Vec<f64>>, mixtures: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let r = baselines::mse_solution(&signals(sources, "s")?, &signals(mixtures, "x")?).map_err(to_py)?;
    Ok(r.w.rows().to_vec())
}

/// SIR in dB of `estimate` against `source` after standardisation and sign alignment.
#[pyfunction]
fn sir(source: Vec<f64>, estimate: Vec<f64>) -> PyResult<f64> {
    evaluation::aligned_sir(&source, &estimate).map_err(to_py)
}

#[pyfunction]
fn separate(x: Vec<Vec<f64>>, w: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let y = signal::separate(&signals(x, "x")?, &matrix(w)?).map_err(to_py)?;
    Ok(y.into_rows())
}

#[pyfunction]
#[pyo3(signature = (sources, mixing_matrix, snr_db=None, noise_seed=0))]
fn mix(
    sources: Vec<Vec<f64>>,
    mixing_matrix: Vec<Vec<f64>>,
    snr_db: Option<f64>,
    noise_seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let cfg = MixingConfig {
        mixing_matrix,
        snr_db,
        noise_seed,
    };
    let x = signal::mix(&signals(sources, "s")?, &cfg).map_err(to_py)?;
    Ok(x.into_rows())
}

/// The default two-source problem `[smooth, ecg-like]`.
#[pyfunction]
#[pyo3(signature = (samples=4096, seed=0, ecg_period=193, smooth_period=512))]
fn synthetic_pair(samples: usize, seed: u64, ecg_period: usize, smooth_period: usize) -> PyResult<Vec<Vec<f64>>> {
    let s = signal::synthetic_pair(ecg_period, smooth_period, samples, seed).map_err(to_py)?;
    Ok(s.into_rows())
}

#[pymodule]
fn mobss_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}

/// Adds every class and function of the extension to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRunConfig>()?;
    m.add_class::<PyRunArtifact>()?;
    m.add_class::<PyEvaluationReport>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(time_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(sparsity, m)?)?;
    m.add_function(wrap_pyfunction!(decorrelation, m)?)?;
    m.add_function(wrap_pyfunction!(objectives, m)?)?;
    m.add_function(wrap_pyfunction!(mse_solution, m)?)?;
    m.add_function(wrap_pyfunction!(sir, m)?)?;
    m.add_function(wrap_pyfunction!(separate, m)?)?;
    m.add_function(wrap_pyfunction!(mix, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_pair, m)?)?;
    Ok(())
}
