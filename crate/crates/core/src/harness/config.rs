use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::criteria::{CriterionSpec, Feasibility};
use crate::error::{Error, Result};
use crate::signal::MixingConfig;
use crate::spea2::EngineConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionKind {
    TimeCorrelation,
    Sparsity,
    Decorrelation,
}

/// A criterion as written in a config file. A time-correlation criterion
/// without a lag uses the lag detected from the mixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionChoice {
    pub id: CriterionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag: Option<usize>,
}

impl CriterionChoice {
    pub fn time_correlation() -> Self {
        CriterionChoice {
            id: CriterionKind::TimeCorrelation,
            lag: None,
        }
    }

    pub fn sparsity() -> Self {
        CriterionChoice {
            id: CriterionKind::Sparsity,
            lag: None,
        }
    }

    pub fn resolve(&self, detected_tau: Option<usize>) -> Option<CriterionSpec> {
        Some(match self.id {
            CriterionKind::TimeCorrelation => CriterionSpec::TimeCorrelation {
                lag: self.lag.or(detected_tau)?,
            },
            CriterionKind::Sparsity => CriterionSpec::Sparsity,
            CriterionKind::Decorrelation => CriterionSpec::Decorrelation,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticData {
    pub ecg_period: usize,
    pub smooth_period: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SyntheticData {
    fn default() -> Self {
        SyntheticData {
            ecg_period: 193,
            smooth_period: 512,
            samples: 4096,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvData {
    /// True sources; mixed with `mixing` when no mixtures file is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<PathBuf>,
    /// Observed mixtures, used as-is.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixtures: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataSource {
    Synthetic(SyntheticData),
    Csv(CsvData),
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic(SyntheticData::default())
    }
}

/// Where and how the lag of the time-correlation criterion is detected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TauDetection {
    /// Zero-based mixture channel.
    pub channel: usize,
    pub min_lag: usize,
    /// Defaults to a quarter of the sample count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_lag: Option<usize>,
}

impl Default for TauDetection {
    fn default() -> Self {
        TauDetection {
            channel: 1,
            min_lag: 20,
            max_lag: None,
        }
    }
}

impl TauDetection {
    pub fn max_lag_for(&self, samples: usize) -> usize {
        self.max_lag.unwrap_or(samples / 4)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub snr_grid: Vec<f64>,
    pub repetitions: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            snr_grid: (1..=10).map(|i| 5.0 * i as f64).collect(),
            repetitions: 100,
        }
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub engine: EngineConfig,
    pub criteria: Vec<CriterionChoice>,
    pub feasibility: Feasibility,
    pub data: DataSource,
    pub mixing: MixingConfig,
    pub snapshot_every: usize,
    pub tau_detection: TauDetection,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            engine: EngineConfig::default(),
            criteria: vec![CriterionChoice::time_correlation(), CriterionChoice::sparsity()],
            feasibility: Feasibility::default(),
            data: DataSource::default(),
            mixing: MixingConfig::default(),
            snapshot_every: 1,
            tau_detection: TauDetection::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl RunConfig {
    /// Every violated constraint, one message per field.
    pub fn violations(&self) -> Vec<String> {
        let mut out = self.engine.violations();
        out.extend(self.feasibility.violations());
        out.extend(self.mixing.violations());
        if self.criteria.is_empty() {
            out.push("criteria: at least one criterion is required".to_string());
        }
        let mut seen = HashSet::new();
        for (i, c) in self.criteria.iter().enumerate() {
            if !seen.insert(c.id) {
                out.push(format!("criteria[{i}]: duplicate criterion {:?}", c.id));
            }
            match (c.id, c.lag) {
                (CriterionKind::TimeCorrelation, Some(0)) => {
                    out.push(format!("criteria[{i}].lag: must be positive"));
                }
                (CriterionKind::Sparsity | CriterionKind::Decorrelation, Some(_)) => {
                    out.push(format!("criteria[{i}].lag: only time-correlation takes a lag"));
                }
                _ => {}
            }
        }
        if self.snapshot_every == 0 {
            out.push("snapshot_every: must be positive".to_string());
        }
        let tau = &self.tau_detection;
        if tau.min_lag == 0 {
            out.push("tau_detection.min_lag: must be positive".to_string());
        }
        if let Some(max) = tau.max_lag {
            if max <= tau.min_lag {
                out.push(format!(
                    "tau_detection.max_lag: {max} must exceed min_lag {}",
                    tau.min_lag
                ));
            }
        }
        let n = self.mixing.mixing_matrix.len();
        match &self.data {
            DataSource::Synthetic(d) => {
                for (name, period) in [("ecg_period", d.ecg_period), ("smooth_period", d.smooth_period)] {
                    if period == 0 || d.samples < 4 * period {
                        out.push(format!(
                            "data.{name}: {period} needs samples >= 4 * period (samples = {})",
                            d.samples
                        ));
                    }
                }
                if n != 2 {
                    out.push(format!(
                        "mixing.mixing_matrix: synthetic data has 2 sources, matrix is {n}x{n}"
                    ));
                }
                if tau.channel >= 2 {
                    out.push(format!("tau_detection.channel: {} out of range (2 mixtures)", tau.channel));
                }
                let max = tau.max_lag_for(d.samples);
                if max >= d.samples || max <= tau.min_lag {
                    out.push(format!(
                        "tau_detection: lag range [{}, {max}] invalid for {} samples",
                        tau.min_lag, d.samples
                    ));
                }
                if self.engine.genome_len != 4 {
                    out.push(format!(
                        "engine.genome_len: {} must be 4 for a 2x2 problem",
                        self.engine.genome_len
                    ));
                }
            }
            DataSource::Csv(c) => {
                if c.sources.is_none() && c.mixtures.is_none() {
                    out.push("data: csv needs `sources`, `mixtures` or both".to_string());
                }
            }
        }
        if self.sweep.snr_grid.is_empty() {
            out.push("sweep.snr_grid: must not be empty".to_string());
        }
        for (i, snr) in self.sweep.snr_grid.iter().enumerate() {
            if !(*snr > 0.0 && *snr <= 100.0) {
                out.push(format!("sweep.snr_grid[{i}]: {snr} outside (0, 100]"));
            }
        }
        if self.sweep.repetitions == 0 {
            out.push("sweep.repetitions: must be at least 1".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// Parses and validates a JSON config document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Reads a config file; relative CSV paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text).map_err(|e| match e {
            Error::Validation(v) => Error::Validation(
                v.into_iter().map(|m| format!("{}: {m}", path.display())).collect(),
            ),
            other => other,
        })?;
        if let DataSource::Csv(c) = &mut cfg.data {
            let base = path.parent().unwrap_or(Path::new("."));
            for p in [&mut c.sources, &mut c.mixtures].into_iter().flatten() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }
}
