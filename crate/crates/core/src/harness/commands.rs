//! Command implementations behind the `mobss` binary.

use std::path::{Path, PathBuf};

use super::artifact::{RunArtifact, ARTIFACT_SUFFIX};
use super::config::RunConfig;
use super::export;
use super::pipeline;
use crate::baselines::{mono_optimize, MonoTarget};
use crate::error::{Error, Result};
use crate::evaluation::{self, EvaluationReport, SweepResult};
use crate::signal::{self, SignalMatrix};
use crate::spea2::{derive_seed, EngineConfig};

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serialisable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads a config file (or the defaults) and applies a seed override.
pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.engine.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn artifact_file_name(cfg: &RunConfig) -> String {
    format!("run-seed{}{ARTIFACT_SUFFIX}", cfg.engine.seed)
}

/// Runs one experiment and writes `<out>/run-seed<seed>.artifact.json`.
pub fn cmd_run(config: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<(PathBuf, RunArtifact)> {
    let cfg = load_config(config, seed)?;
    let artifact = pipeline::run_experiment(&cfg)?;
    ensure_dir(out)?;
    let path = out.join(artifact_file_name(&cfg));
    artifact.write(&path)?;
    Ok((path, artifact))
}

fn mono_seed(cfg: &EngineConfig, index: usize) -> EngineConfig {
    EngineConfig {
        seed: derive_seed(cfg.seed, 1000 + index as u64),
        ..cfg.clone()
    }
}

/// Scores an artifact against known sources and writes `report.json`,
/// `front.csv`, `ordered_sir.csv` and `estimates.csv`.
pub fn cmd_evaluate(artifact_path: &Path, sources: Option<&Path>, out: &Path, order_by: usize) -> Result<EvaluationReport> {
    let artifact = RunArtifact::read(artifact_path)?;
    let sources: SignalMatrix = match sources {
        Some(p) => signal::load_signals(p).map_err(|e| match e {
            signal::SignalError::Io(io) => Error::io(p, io),
            other => Error::Format {
                path: p.display().to_string(),
                message: other.to_string(),
            },
        })?,
        None => artifact
            .sources
            .clone()
            .ok_or_else(|| Error::validation("evaluate: artifact has no sources; pass a sources file"))?,
    };
    let x = &artifact.mixtures;
    if sources.channels() != x.channels() || sources.samples() != x.samples() {
        return Err(Error::validation(format!(
            "shape mismatch: sources are {}x{}, artifact mixtures are {}x{}",
            sources.channels(),
            sources.samples(),
            x.channels(),
            x.samples()
        )));
    }
    if artifact.final_archive.is_empty() {
        return Err(Error::validation("evaluate: artifact archive is empty"));
    }
    if order_by >= artifact.criteria.len() {
        return Err(Error::validation(format!(
            "order_by: {order_by} out of range ({} criteria)",
            artifact.criteria.len()
        )));
    }
    let members = artifact.members()?;
    let mut report = evaluation::evaluate_archive(&members, &sources, x, order_by)?;
    for (i, spec) in artifact.criteria.iter().enumerate() {
        let r = mono_optimize(
            &MonoTarget::Single(*spec),
            x,
            &mono_seed(&artifact.config.engine, i),
            &artifact.config.feasibility,
        )?;
        let wall_time = r.wall_time;
        let mut reference = evaluation::reference(&format!("mono-{}", spec.id()), r.w, &sources, x)?;
        reference.wall_time = wall_time;
        report.mono.push(reference);
    }

    ensure_dir(out)?;
    write_json(&out.join("report.json"), &report)?;
    let mse_point = export::mse_point(&report.mse.w, x, &artifact.criteria, &artifact.config.feasibility)?;
    let penalized: Vec<bool> = artifact.final_archive.iter().map(|e| e.penalized).collect();
    let (h, rows) = export::front_table(&artifact.criteria, &report.objectives, &penalized, Some(&mse_point));
    export::write_table(&out.join("front.csv"), &h, &rows)?;
    let (h, rows) = export::ordered_sir_table(&artifact.criteria, &report);
    export::write_table(&out.join("ordered_sir.csv"), &h, &rows)?;
    let best = &members[report.best_index].w;
    let (h, rows) = export::estimates_table(&report, best, &sources, x)?;
    export::write_table(&out.join("estimates.csv"), &h, &rows)?;
    Ok(report)
}

/// Runs the SNR sweep of the config and writes `sweep.json`, `sweep.csv`
/// and `sweep_cells.csv`. Fails only when every cell fails.
pub fn cmd_sweep(config: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<SweepResult> {
    let cfg = load_config(config, seed)?;
    let result = evaluation::snr_sweep(&cfg.sweep.snr_grid, cfg.sweep.repetitions, &cfg)?;
    ensure_dir(out)?;
    write_json(&out.join("sweep.json"), &result)?;
    let (h, rows) = export::sweep_table(&result);
    export::write_table(&out.join("sweep.csv"), &h, &rows)?;
    let (h, rows) = export::sweep_cells_table(&result);
    export::write_table(&out.join("sweep_cells.csv"), &h, &rows)?;
    Ok(result)
}

/// Writes `convergence.csv` (every archive member per snapshot) and
/// `convergence_summary.csv`.
pub fn cmd_convergence(artifact_path: &Path, out: &Path) -> Result<PathBuf> {
    let artifact = RunArtifact::read(artifact_path)?;
    if artifact.snapshots.len() < 2 {
        return Err(Error::validation(format!(
            "missing snapshots: convergence needs at least 2, artifact has {}",
            artifact.snapshots.len()
        )));
    }
    ensure_dir(out)?;
    let path = out.join("convergence.csv");
    let (h, rows) = export::convergence_table(&artifact.criteria, &artifact.snapshots);
    export::write_table(&path, &h, &rows)?;
    let (h, rows) = export::convergence_summary(&artifact.criteria, &artifact.snapshots);
    export::write_table(&out.join("convergence_summary.csv"), &h, &rows)?;
    Ok(path)
}
