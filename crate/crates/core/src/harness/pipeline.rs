use super::artifact::{ArchiveEntry, RunArtifact, SCHEMA_VERSION};
use super::config::{DataSource, RunConfig};
use crate::criteria::CriterionSpec;
use crate::error::{Error, Result};
use crate::signal::{self, SignalMatrix};
use crate::spea2::{self, RunOutcome, SeparationProblem};

/// Signals an experiment runs on.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub sources: Option<SignalMatrix>,
    pub mixtures: SignalMatrix,
}

/// Ground-truth sources named by the config, if any.
pub fn load_sources(cfg: &RunConfig) -> Result<Option<SignalMatrix>> {
    Ok(match &cfg.data {
        DataSource::Synthetic(d) => Some(signal::synthetic_pair(
            d.ecg_period,
            d.smooth_period,
            d.samples,
            d.seed,
        )?),
        DataSource::Csv(c) => match &c.sources {
            Some(p) => Some(signal::load_signals(p).map_err(|e| with_path(p, e))?),
            None => None,
        },
    })
}

fn with_path(path: &std::path::Path, e: signal::SignalError) -> Error {
    match e {
        signal::SignalError::Io(io) => Error::io(path, io),
        signal::SignalError::Csv { .. } | signal::SignalError::NoSamples | signal::SignalError::Ragged { .. } => {
            Error::Format {
                path: path.display().to_string(),
                message: e.to_string(),
            }
        }
        other => other.into(),
    }
}

/// Builds mixtures from already loaded sources (or the configured mixture file).
pub fn prepare_with_sources(cfg: &RunConfig, sources: Option<SignalMatrix>) -> Result<Prepared> {
    let file_mixtures = match &cfg.data {
        DataSource::Csv(c) => match &c.mixtures {
            Some(p) => Some(signal::load_signals(p).map_err(|e| with_path(p, e))?),
            None => None,
        },
        DataSource::Synthetic(_) => None,
    };
    let mixtures = match (file_mixtures, &sources) {
        (Some(x), _) => x,
        (None, Some(s)) => signal::mix(s, &cfg.mixing)?,
        (None, None) => return Err(Error::validation("data: no sources or mixtures")),
    };
    let n = mixtures.channels();
    let mut v = Vec::new();
    if let Some(s) = &sources {
        if s.channels() != n || s.samples() != mixtures.samples() {
            v.push(format!(
                "data: sources {}x{} incompatible with mixtures {}x{}",
                s.channels(),
                s.samples(),
                n,
                mixtures.samples()
            ));
        }
    }
    if cfg.engine.genome_len != n * n {
        v.push(format!(
            "engine.genome_len: {} must be {} for {n} mixtures",
            cfg.engine.genome_len,
            n * n
        ));
    }
    if !v.is_empty() {
        return Err(Error::Validation(v));
    }
    Ok(Prepared { sources, mixtures })
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    prepare_with_sources(cfg, load_sources(cfg)?)
}

/// Resolves the configured criteria, detecting τ when some lag is unspecified.
pub fn resolve_criteria(cfg: &RunConfig, mixtures: &SignalMatrix) -> Result<(Vec<CriterionSpec>, Option<usize>)> {
    let needs_tau = cfg.criteria.iter().any(|c| c.resolve(None).is_none());
    let tau = if needs_tau {
        let t = &cfg.tau_detection;
        if t.channel >= mixtures.channels() {
            return Err(Error::validation(format!(
                "tau_detection.channel: {} out of range ({} mixtures)",
                t.channel,
                mixtures.channels()
            )));
        }
        let max = t.max_lag_for(mixtures.samples()).min(mixtures.samples() - 1);
        Some(signal::detect_delay(mixtures.row(t.channel), t.min_lag, max)?)
    } else {
        None
    };
    let specs = cfg
        .criteria
        .iter()
        .map(|c| c.resolve(tau).expect("lag resolved"))
        .collect();
    Ok((specs, tau))
}

/// Runs the engine on prepared data and packages the artifact.
pub fn execute(cfg: &RunConfig, data: Prepared, parallel: bool) -> Result<RunArtifact> {
    let (specs, tau) = resolve_criteria(cfg, &data.mixtures)?;
    let problem = SeparationProblem::new(&data.mixtures, specs.clone(), cfg.feasibility);
    let RunOutcome {
        archive,
        snapshots,
        timings,
        ..
    } = spea2::run_with(&cfg.engine, &problem, cfg.snapshot_every, parallel)?;
    let final_archive = archive
        .iter()
        .map(|c| ArchiveEntry {
            genome: c.genome.clone(),
            objectives: c.values().to_vec(),
            penalized: c.is_penalized(),
        })
        .collect();
    Ok(RunArtifact {
        schema_version: SCHEMA_VERSION.to_string(),
        config: cfg.clone(),
        criteria: specs,
        detected_tau: tau,
        mixtures: data.mixtures,
        sources: data.sources,
        final_archive,
        snapshots,
        timings,
    })
}

pub fn run_experiment(cfg: &RunConfig) -> Result<RunArtifact> {
    cfg.validate()?;
    execute(cfg, prepare(cfg)?, true)
}
