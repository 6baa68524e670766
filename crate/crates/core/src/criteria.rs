//! Separation criteria, scalarisation and the feasibility penalty.
//!
//! All criteria are minimised. They receive `W` and `X` rather than the
//! estimates so that each one controls its own preprocessing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{self, SeparationMatrix, SignalError, SignalMatrix};

#[derive(Debug, Error)]
pub enum CriteriaError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("estimate row {0} is identically zero")]
    ZeroEstimate(usize),
    #[error("estimate row {0} is constant")]
    ConstantEstimate(usize),
    #[error("lag {lag} must be in [1, {samples})")]
    InvalidLag { lag: usize, samples: usize },
    #[error("no criteria configured")]
    NoCriteria,
    #[error("weight vector has {found} entries, expected {expected}")]
    WeightLength { expected: usize, found: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid feasibility settings: {0}")]
    InvalidFeasibility(String),
}

pub type Result<T, E = CriteriaError> = std::result::Result<T, E>;

/// A configured criterion. Serialises as `{"id": "time-correlation", "lag": 193}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
#[serde(try_from = "RawSpec")]
pub enum CriterionSpec {
    TimeCorrelation { lag: usize },
    Sparsity,
    Decorrelation,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    id: String,
    lag: Option<usize>,
}

impl TryFrom<RawSpec> for CriterionSpec {
    type Error = String;

    fn try_from(raw: RawSpec) -> std::result::Result<Self, String> {
        match (raw.id.as_str(), raw.lag) {
            ("time-correlation", Some(lag)) if lag > 0 => Ok(CriterionSpec::TimeCorrelation { lag }),
            ("time-correlation", _) => Err("time-correlation needs a positive lag".to_string()),
            ("sparsity", None) => Ok(CriterionSpec::Sparsity),
            ("decorrelation", None) => Ok(CriterionSpec::Decorrelation),
            ("sparsity" | "decorrelation", Some(_)) => Err(format!("{} takes no lag", raw.id)),
            (other, _) => Err(format!("unknown criterion `{other}`")),
        }
    }
}

impl CriterionSpec {
    pub fn id(&self) -> &'static str {
        match self {
            CriterionSpec::TimeCorrelation { .. } => "time-correlation",
            CriterionSpec::Sparsity => "sparsity",
            CriterionSpec::Decorrelation => "decorrelation",
        }
    }

    /// Short column name used in CSV exports.
    pub fn short_name(&self) -> &'static str {
        match self {
            CriterionSpec::TimeCorrelation { .. } => "tc",
            CriterionSpec::Sparsity => "sp",
            CriterionSpec::Decorrelation => "dc",
        }
    }
}

/// Criterion values `[J_1, ..., J_K]` of one separation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub values: Vec<f64>,
    pub penalized: bool,
}

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Self {
        ObjectiveVector {
            values,
            penalized: false,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Pairwise-correlation constraint: estimates with `|pearson| > threshold`
/// get `penalty` added to every objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Feasibility {
    pub threshold: f64,
    pub penalty: f64,
}

impl Default for Feasibility {
    fn default() -> Self {
        Feasibility {
            threshold: 0.2,
            penalty: 1e5,
        }
    }
}

impl Feasibility {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            out.push(format!("feasibility.threshold: {} outside (0, 1)", self.threshold));
        }
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            out.push(format!("feasibility.penalty: {} must be positive", self.penalty));
        }
        out
    }
}

fn centered(row: &[f64]) -> Vec<f64> {
    let m = signal::mean(row);
    row.iter().map(|v| v - m).collect()
}

fn timecorr_term(row: &[f64], lag: usize) -> f64 {
    let c = centered(row);
    let n = c.len() - lag;
    let s: f64 = c[lag..].iter().zip(&c[..n]).map(|(a, b)| a * b).sum();
    (s / n as f64).abs()
}

fn check_lag(lag: usize, samples: usize) -> Result<()> {
    if lag == 0 || lag >= samples {
        return Err(CriteriaError::InvalidLag { lag, samples });
    }
    Ok(())
}

fn sparsity_term(i: usize, row: &[f64]) -> Result<f64> {
    let l1: f64 = row.iter().map(|v| v.abs()).sum();
    let l2 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
    if l2 == 0.0 {
        return Err(CriteriaError::ZeroEstimate(i));
    }
    Ok(l1 / l2)
}

/// Centered rows scaled to unit norm, used for pairwise correlations.
fn unit_centered(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let c = centered(row);
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(CriteriaError::ConstantEstimate(i));
            }
            Ok(c.into_iter().map(|v| v / norm).collect())
        })
        .collect()
}

fn correlations(units: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..units.len() {
        for j in i + 1..units.len() {
            let r: f64 = units[i].iter().zip(&units[j]).map(|(a, b)| a * b).sum();
            out.push(r.clamp(-1.0, 1.0));
        }
    }
    out
}

/// `-Σ_i |E[ỹ_i(t) ỹ_i(t-τ)]|` with `ỹ_i` the centered estimates; the mean
/// runs over the `T - τ` overlapping samples.
pub fn j_timecorr(w: &SeparationMatrix, x: &SignalMatrix, lag: usize) -> Result<f64> {
    check_lag(lag, x.samples())?;
    let y = signal::project(x, w)?;
    Ok(-y.iter().map(|row| timecorr_term(row, lag)).sum::<f64>())
}

/// `Σ_i ‖y_i‖₁ / ‖y_i‖₂` on the raw estimates.
pub fn j_sparsity(w: &SeparationMatrix, x: &SignalMatrix) -> Result<f64> {
    let y = signal::project(x, w)?;
    y.iter().enumerate().map(|(i, row)| sparsity_term(i, row)).sum()
}

/// `Σ_{i<j} pearson(y_i, y_j)²`.
pub fn j_decorr(w: &SeparationMatrix, x: &SignalMatrix) -> Result<f64> {
    let y = signal::project(x, w)?;
    let units = unit_centered(&y)?;
    Ok(correlations(&units).iter().map(|r| r * r).sum())
}

/// Largest `|pearson|` over all pairs of estimate rows (0 for a single row).
pub fn max_abs_correlation(w: &SeparationMatrix, x: &SignalMatrix) -> Result<f64> {
    let y = signal::project(x, w)?;
    let units = unit_centered(&y)?;
    Ok(correlations(&units).iter().fold(0.0, |m, r| m.max(r.abs())))
}

pub fn weighted_sum(obj: &ObjectiveVector, lambda: &[f64]) -> Result<f64> {
    check_weights(lambda, obj.len())?;
    Ok(obj.values.iter().zip(lambda).map(|(j, l)| j * l).sum())
}

pub fn check_weights(lambda: &[f64], expected: usize) -> Result<()> {
    if lambda.len() != expected {
        return Err(CriteriaError::WeightLength {
            expected,
            found: lambda.len(),
        });
    }
    if lambda.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(CriteriaError::InvalidWeights(
            "entries must be finite and non-negative".to_string(),
        ));
    }
    if lambda.iter().all(|&l| l == 0.0) {
        return Err(CriteriaError::InvalidWeights("all weights are zero".to_string()));
    }
    Ok(())
}

/// Computes every configured criterion and applies the feasibility penalty.
pub fn evaluate(
    w: &SeparationMatrix,
    x: &SignalMatrix,
    specs: &[CriterionSpec],
    threshold: f64,
    penalty: f64,
) -> Result<ObjectiveVector> {
    let feasibility = Feasibility { threshold, penalty };
    if let Some(v) = feasibility.violations().into_iter().next() {
        return Err(CriteriaError::InvalidFeasibility(v));
    }
    evaluate_with(w, x, specs, &feasibility)
}

pub fn evaluate_with(
    w: &SeparationMatrix,
    x: &SignalMatrix,
    specs: &[CriterionSpec],
    feasibility: &Feasibility,
) -> Result<ObjectiveVector> {
    if specs.is_empty() {
        return Err(CriteriaError::NoCriteria);
    }
    let y = signal::project(x, w)?;
    let units = unit_centered(&y)?;
    let rs = correlations(&units);
    let mut values = Vec::with_capacity(specs.len());
    for spec in specs {
        let v = match *spec {
            CriterionSpec::TimeCorrelation { lag } => {
                check_lag(lag, x.samples())?;
                -y.iter().map(|row| timecorr_term(row, lag)).sum::<f64>()
            }
            CriterionSpec::Sparsity => y
                .iter()
                .enumerate()
                .map(|(i, row)| sparsity_term(i, row))
                .sum::<Result<f64>>()?,
            CriterionSpec::Decorrelation => rs.iter().map(|r| r * r).sum(),
        };
        values.push(v);
    }
    let penalized = rs.iter().any(|r| r.abs() > feasibility.threshold);
    if penalized {
        for v in values.iter_mut() {
            *v += feasibility.penalty;
        }
    }
    Ok(ObjectiveVector { values, penalized })
}
