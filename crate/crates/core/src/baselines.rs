//! Mono-objective baselines and the supervised least-squares benchmark.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::{CriteriaError, CriterionSpec, Feasibility};
use crate::signal::{self, SeparationMatrix, SignalError, SignalMatrix};
use crate::spea2::{self, derive_seed, EngineConfig, EngineError, Scalarized, SeparationProblem};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("mixture covariance is singular")]
    Singular,
    #[error("scalar run produced an empty archive")]
    NoSolution,
}

pub type Result<T, E = BaselineError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMethod {
    MonoSingle,
    MonoWeighted,
    MseClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub w: SeparationMatrix,
    pub objective_value: f64,
    pub penalized: bool,
    pub wall_time: f64,
    pub method: BaselineMethod,
}

/// What a mono-objective run minimises.
#[derive(Debug, Clone, PartialEq)]
pub enum MonoTarget {
    Single(CriterionSpec),
    Weighted {
        specs: Vec<CriterionSpec>,
        weights: Vec<f64>,
    },
}

/// Minimises one scalar objective with the same engine and penalty as the
/// multi-objective run and returns the best member of the final archive.
pub fn mono_optimize(
    target: &MonoTarget,
    x: &SignalMatrix,
    cfg: &EngineConfig,
    feasibility: &Feasibility,
) -> Result<BaselineResult> {
    let start = Instant::now();
    let (specs, weights, method) = match target {
        MonoTarget::Single(spec) => (vec![*spec], vec![1.0], BaselineMethod::MonoSingle),
        MonoTarget::Weighted { specs, weights } => {
            (specs.clone(), weights.clone(), BaselineMethod::MonoWeighted)
        }
    };
    let problem = SeparationProblem::new(x, specs, *feasibility);
    let scalar = Scalarized::new(problem.clone(), weights)?;
    let out = spea2::run(cfg, &scalar, cfg.max_iterations)?;
    let best = out
        .archive
        .iter()
        .min_by(|a, b| a.values()[0].total_cmp(&b.values()[0]))
        .ok_or(BaselineError::NoSolution)?;
    Ok(BaselineResult {
        w: problem.matrix(&best.genome)?,
        objective_value: best.values()[0],
        penalized: best.is_penalized(),
        wall_time: start.elapsed().as_secs_f64(),
        method,
    })
}

/// One weighted run per `λ`; run `i` uses a seed derived from `cfg.seed` and `i`.
pub fn weighted_scan(
    lambdas: &[Vec<f64>],
    specs: &[CriterionSpec],
    x: &SignalMatrix,
    cfg: &EngineConfig,
    feasibility: &Feasibility,
) -> Result<Vec<BaselineResult>> {
    lambdas
        .iter()
        .enumerate()
        .map(|(i, lambda)| {
            let run_cfg = EngineConfig {
                seed: derive_seed(cfg.seed, i as u64),
                ..cfg.clone()
            };
            let target = MonoTarget::Weighted {
                specs: specs.to_vec(),
                weights: lambda.clone(),
            };
            mono_optimize(&target, x, &run_cfg, feasibility)
        })
        .collect()
}

fn centered_rows(m: &SignalMatrix) -> Vec<Vec<f64>> {
    m.rows()
        .iter()
        .map(|r| {
            let mu = signal::mean(r);
            r.iter().map(|v| v - mu).collect()
        })
        .collect()
}

fn cross_cov(a: &[Vec<f64>], b: &[Vec<f64>]) -> DMatrix<f64> {
    let t = a[0].len() as f64;
    DMatrix::from_fn(a.len(), b.len(), |i, j| {
        a[i].iter().zip(&b[j]).map(|(x, y)| x * y).sum::<f64>() / t
    })
}

fn check_pair(sources: &SignalMatrix, mixtures: &SignalMatrix) -> Result<()> {
    if sources.samples() != mixtures.samples() {
        return Err(SignalError::DimensionMismatch {
            what: "source vs mixture sample counts",
            expected: mixtures.samples(),
            found: sources.samples(),
        }
        .into());
    }
    Ok(())
}

/// Mean over samples of `‖s̃(t) - W x̃(t)‖²` on centered signals.
pub fn mse_objective(w: &SeparationMatrix, sources: &SignalMatrix, mixtures: &SignalMatrix) -> Result<f64> {
    check_pair(sources, mixtures)?;
    if w.nrows() != sources.channels() {
        return Err(SignalError::DimensionMismatch {
            what: "separation matrix rows vs source channels",
            expected: sources.channels(),
            found: w.nrows(),
        }
        .into());
    }
    let s = centered_rows(sources);
    let x = SignalMatrix::with_prefix("x", centered_rows(mixtures))?;
    let y = signal::project(&x, w)?;
    let total: f64 = s
        .iter()
        .zip(&y)
        .map(|(si, yi)| si.iter().zip(yi).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum();
    Ok(total / sources.samples() as f64)
}

/// Least-squares matrix `W = C_sx C_xx⁻¹` from centered covariances.
pub fn mse_solution(sources: &SignalMatrix, mixtures: &SignalMatrix) -> Result<BaselineResult> {
    let start = Instant::now();
    check_pair(sources, mixtures)?;
    let s = centered_rows(sources);
    let x = centered_rows(mixtures);
    let cxx = cross_cov(&x, &x);
    let csx = cross_cov(&s, &x);
    let eig = cxx.clone().symmetric_eigenvalues();
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
    if !(hi > 0.0) || lo <= hi * 1e-12 {
        return Err(BaselineError::Singular);
    }
    let chol = cxx.cholesky().ok_or(BaselineError::Singular)?;
    // W Cxx = Csx  ⇔  Cxx Wᵀ = Csxᵀ
    let wt = chol.solve(&csx.transpose());
    let rows: Vec<Vec<f64>> = (0..wt.ncols())
        .map(|i| wt.column(i).iter().copied().collect())
        .collect();
    let w = SeparationMatrix::new(rows)?;
    let objective_value = mse_objective(&w, sources, mixtures)?;
    Ok(BaselineResult {
        w,
        objective_value,
        penalized: false,
        wall_time: start.elapsed().as_secs_f64(),
        method: BaselineMethod::MseClosedForm,
    })
}
