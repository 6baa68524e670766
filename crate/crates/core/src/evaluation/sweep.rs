use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate_archive, reference, EvaluationError, Sir};
use crate::baselines::{mono_optimize, MonoTarget};
use crate::harness::config::RunConfig;
use crate::harness::pipeline::{self, Prepared};
use crate::signal::SignalMatrix;
use crate::spea2::{derive_seed, EngineConfig};

/// Averaged SIRs of one (SNR, repetition) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub snr: f64,
    pub repetition: usize,
    pub best: Sir,
    pub worst: Sir,
    pub average: Sir,
    /// One entry per configured criterion, in config order.
    pub mono: Vec<Sir>,
    pub mse: Sir,
    pub combined: Sir,
    pub archive_size: usize,
    pub penalized: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub snr: f64,
    pub repetition: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<Sir>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub snr_grid: Vec<f64>,
    pub repetitions: usize,
    pub series: Vec<Series>,
    pub cells: Vec<SweepCell>,
    pub failures: Vec<CellFailure>,
}

impl SweepResult {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }
}

/// Seeds of repetition `r`: shared across the SNR grid (common random numbers).
pub fn repetition_config(base: &RunConfig, snr: f64, repetition: usize) -> RunConfig {
    let mut cfg = base.clone();
    cfg.mixing.snr_db = Some(snr);
    cfg.mixing.noise_seed = derive_seed(base.mixing.noise_seed, repetition as u64);
    cfg.engine.seed = derive_seed(base.engine.seed, repetition as u64);
    cfg
}

fn mono_config(cfg: &EngineConfig, index: usize) -> EngineConfig {
    EngineConfig {
        seed: derive_seed(cfg.seed, 1000 + index as u64),
        ..cfg.clone()
    }
}

/// Runs the multi-objective engine, one mono run per criterion, and the
/// MSE benchmark on one noisy realisation.
pub fn run_cell(cfg: &RunConfig, sources: &SignalMatrix) -> crate::Result<SweepCell> {
    let data = pipeline::prepare_with_sources(cfg, Some(sources.clone()))?;
    let mixtures = data.mixtures.clone();
    let artifact = pipeline::execute(cfg, data, true)?;
    let members = artifact.members()?;
    let report = evaluate_archive(&members, sources, &mixtures, 0)?;
    let mut mono = Vec::new();
    for (i, spec) in artifact.criteria.iter().enumerate() {
        let r = mono_optimize(
            &MonoTarget::Single(*spec),
            &mixtures,
            &mono_config(&cfg.engine, i),
            &cfg.feasibility,
        )?;
        mono.push(reference(spec.id(), r.w, sources, &mixtures)?.mean_sir);
    }
    let average = report.mean_sir.iter().map(|s| s.0).sum::<f64>() / report.mean_sir.len() as f64;
    Ok(SweepCell {
        snr: cfg.mixing.snr_db.unwrap_or(f64::INFINITY),
        repetition: 0,
        best: report.mean_sir[report.best_index],
        worst: report.mean_sir[report.worst_index],
        average: Sir(average),
        mono,
        mse: report.mse.mean_sir,
        combined: Sir(report.combined_mean()),
        archive_size: artifact.final_archive.len(),
        penalized: artifact.final_archive.iter().filter(|e| e.penalized).count(),
    })
}

/// Mono-objective runs reuse the criteria of the base config, so every
/// configured criterion gets a `mono_<short name>` curve.
pub fn snr_sweep(grid: &[f64], repetitions: usize, base: &RunConfig) -> crate::Result<SweepResult> {
    let mut base = base.clone();
    base.sweep.snr_grid = grid.to_vec();
    base.sweep.repetitions = repetitions;
    base.validate()?;
    let Prepared { sources, .. } = pipeline::prepare(&base)?;
    let sources = sources.ok_or_else(|| {
        crate::Error::validation("data: the sweep is supervised and needs sources")
    })?;
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..repetitions).map(move |r| (g, r)))
        .collect();
    let outcomes: Vec<crate::Result<SweepCell>> = jobs
        .par_iter()
        .map(|&(g, r)| {
            let cfg = repetition_config(&base, grid[g], r);
            run_cell(&cfg, &sources).map(|mut c| {
                c.snr = grid[g];
                c.repetition = r;
                c
            })
        })
        .collect();
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for (&(g, r), out) in jobs.iter().zip(outcomes) {
        match out {
            Ok(c) => cells.push(c),
            Err(e) => failures.push(CellFailure {
                snr: grid[g],
                repetition: r,
                error: e.to_string(),
            }),
        }
    }
    if cells.is_empty() {
        return Err(EvaluationError::Sweep(format!(
            "all {} sweep cells failed; first error: {}",
            failures.len(),
            failures.first().map_or("", |f| f.error.as_str())
        ))
        .into());
    }
    let short: Vec<&str> = base
        .criteria
        .iter()
        .map(|c| c.resolve(Some(1)).expect("resolvable").short_name())
        .collect();
    let mut names: Vec<String> = ["best", "worst", "average"].iter().map(|s| s.to_string()).collect();
    names.extend(short.iter().map(|s| format!("mono_{s}")));
    names.push("mse".to_string());
    names.push("combined".to_string());
    let pick = |c: &SweepCell, k: usize| -> f64 {
        let m = short.len();
        match k {
            0 => c.best.0,
            1 => c.worst.0,
            2 => c.average.0,
            k if k < 3 + m => c.mono[k - 3].0,
            k if k == 3 + m => c.mse.0,
            _ => c.combined.0,
        }
    };
    let series = names
        .into_iter()
        .enumerate()
        .map(|(k, name)| Series {
            name,
            values: grid
                .iter()
                .map(|&snr| {
                    let vals: Vec<f64> = cells.iter().filter(|c| c.snr == snr).map(|c| pick(c, k)).collect();
                    Sir(if vals.is_empty() {
                        f64::NAN
                    } else {
                        vals.iter().sum::<f64>() / vals.len() as f64
                    })
                })
                .collect(),
        })
        .collect();
    Ok(SweepResult {
        snr_grid: grid.to_vec(),
        repetitions,
        series,
        cells,
        failures,
    })
}
