//! SPEA2 evolutionary loop with an external archive.
//!
//! Each generation the union of population and archive is scored
//! (strength, raw fitness, density), the archive is rebuilt by environmental
//! selection, and the next population is bred from binary-tournament winners:
//! `⌈αB⌉` arithmetic-crossover children and the rest Gaussian mutants.

mod fitness;
mod rng;
mod selection;
mod variation;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::{self, CriteriaError, CriterionSpec, Feasibility, ObjectiveVector};
use crate::signal::{SeparationMatrix, SignalMatrix};

pub use fitness::{assign_fitness, dominates, non_dominated_indices};
pub use rng::{derive_seed, stream_rng};
pub use selection::{binary_tournament, environmental_selection};
pub use variation::{crossover, mutate};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("objective vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty pool")]
    EmptyPool,
    #[error("archive size must be positive")]
    ZeroArchive,
    #[error("empty archive")]
    EmptyArchive,
    #[error("degenerate genome bounds [{0}, {1}]")]
    DegenerateBounds(f64, f64),
    #[error("invalid engine config: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("candidate {index} is not evaluated")]
    Unevaluated { index: usize },
    #[error("evaluator expects genomes of length {expected}, config produces {found}")]
    Dimension { expected: usize, found: usize },
    #[error("evaluation failed at iteration {iteration}, candidate {candidate}: {source}")]
    Evaluation {
        iteration: usize,
        candidate: usize,
        #[source]
        source: CriteriaError,
    },
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;

/// Closed genome interval `[lower, upper]` applied to every gene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        let b = Bounds { lower, upper };
        b.check()?;
        Ok(b)
    }

    fn check(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(EngineError::DegenerateBounds(self.lower, self.upper));
        }
        Ok(())
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lower, self.upper)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub population_size: usize,
    pub archive_size: usize,
    pub max_iterations: usize,
    pub crossover_rate: f64,
    pub mutation_sigma: f64,
    pub genome_bounds: Bounds,
    pub seed: u64,
    /// Genome length; `0` lets the evaluator decide.
    pub genome_len: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            population_size: 100,
            archive_size: 50,
            max_iterations: 60,
            crossover_rate: 0.5,
            mutation_sigma: 0.25,
            genome_bounds: Bounds {
                lower: -2.0,
                upper: 2.0,
            },
            seed: 0,
            genome_len: 4,
        }
    }
}

impl EngineConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.population_size == 0 {
            out.push("engine.population_size: must be positive".to_string());
        }
        if self.archive_size == 0 {
            out.push("engine.archive_size: must be positive".to_string());
        }
        if self.archive_size > self.population_size {
            out.push(format!(
                "engine.archive_size: {} exceeds population_size {}",
                self.archive_size, self.population_size
            ));
        }
        if self.max_iterations == 0 {
            out.push("engine.max_iterations: must be positive".to_string());
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            out.push(format!(
                "engine.crossover_rate: {} outside [0, 1]",
                self.crossover_rate
            ));
        }
        if !(self.mutation_sigma.is_finite() && self.mutation_sigma >= 0.0) {
            out.push(format!(
                "engine.mutation_sigma: {} must be non-negative",
                self.mutation_sigma
            ));
        }
        if self.genome_bounds.check().is_err() {
            out.push(format!(
                "engine.genome_bounds: [{}, {}] is degenerate",
                self.genome_bounds.lower, self.genome_bounds.upper
            ));
        }
        if self.genome_len == 0 {
            out.push("engine.genome_len: must be positive".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(EngineError::InvalidConfig(v))
        }
    }

    pub fn crossover_children(&self) -> usize {
        (self.crossover_rate * self.population_size as f64).ceil() as usize
    }
}

/// One individual: genome plus the quantities assigned during selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub genome: Vec<f64>,
    pub objectives: Option<ObjectiveVector>,
    pub strength: usize,
    pub raw_fitness: f64,
    pub density_distance: f64,
    pub fitness: f64,
}

impl Candidate {
    pub fn new(genome: Vec<f64>) -> Self {
        Candidate {
            genome,
            objectives: None,
            strength: 0,
            raw_fitness: 0.0,
            density_distance: 0.0,
            fitness: f64::INFINITY,
        }
    }

    pub fn evaluated(genome: Vec<f64>, objectives: ObjectiveVector) -> Self {
        Candidate {
            objectives: Some(objectives),
            ..Candidate::new(genome)
        }
    }

    /// Objective values; panics on an unevaluated candidate.
    pub fn values(&self) -> &[f64] {
        &self
            .objectives
            .as_ref()
            .expect("candidate must be evaluated")
            .values
    }

    pub fn is_penalized(&self) -> bool {
        self.objectives.as_ref().is_some_and(|o| o.penalized)
    }
}

/// Maps a genome to an objective vector. Must be shareable across threads.
pub trait Evaluator: Sync {
    fn genome_len(&self) -> usize;
    fn objective_count(&self) -> usize;
    fn evaluate(&self, genome: &[f64]) -> Result<ObjectiveVector, CriteriaError>;
}

/// Square separation problem: genome = row-major `W`.
#[derive(Debug, Clone)]
pub struct SeparationProblem<'a> {
    pub mixtures: &'a SignalMatrix,
    pub specs: Vec<CriterionSpec>,
    pub feasibility: Feasibility,
}

impl<'a> SeparationProblem<'a> {
    pub fn new(mixtures: &'a SignalMatrix, specs: Vec<CriterionSpec>, feasibility: Feasibility) -> Self {
        SeparationProblem {
            mixtures,
            specs,
            feasibility,
        }
    }

    pub fn matrix(&self, genome: &[f64]) -> Result<SeparationMatrix, CriteriaError> {
        let n = self.mixtures.channels();
        Ok(SeparationMatrix::from_genome(genome, n, n)?)
    }
}

impl Evaluator for SeparationProblem<'_> {
    fn genome_len(&self) -> usize {
        self.mixtures.channels() * self.mixtures.channels()
    }

    fn objective_count(&self) -> usize {
        self.specs.len()
    }

    fn evaluate(&self, genome: &[f64]) -> Result<ObjectiveVector, CriteriaError> {
        let w = self.matrix(genome)?;
        criteria::evaluate_with(&w, self.mixtures, &self.specs, &self.feasibility)
    }
}

/// Collapses an evaluator to the single objective `Σ λ_k J_k`, keeping the
/// penalty flag.
#[derive(Debug, Clone)]
pub struct Scalarized<E> {
    pub inner: E,
    pub weights: Vec<f64>,
}

impl<E: Evaluator> Scalarized<E> {
    pub fn new(inner: E, weights: Vec<f64>) -> Result<Self, CriteriaError> {
        criteria::check_weights(&weights, inner.objective_count())?;
        Ok(Scalarized { inner, weights })
    }
}

impl<E: Evaluator> Evaluator for Scalarized<E> {
    fn genome_len(&self) -> usize {
        self.inner.genome_len()
    }

    fn objective_count(&self) -> usize {
        1
    }

    fn evaluate(&self, genome: &[f64]) -> Result<ObjectiveVector, CriteriaError> {
        let obj = self.inner.evaluate(genome)?;
        let value = criteria::weighted_sum(&obj, &self.weights)?;
        Ok(ObjectiveVector {
            values: vec![value],
            penalized: obj.penalized,
        })
    }
}

/// Archive objectives at one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub iteration: usize,
    pub objectives: Vec<Vec<f64>>,
    pub penalized: Vec<bool>,
}

impl Snapshot {
    pub fn penalized_count(&self) -> usize {
        self.penalized.iter().filter(|&&p| p).count()
    }
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub per_iteration: Vec<f64>,
    pub evaluation: f64,
    pub selection: f64,
    pub variation: f64,
    pub total: f64,
}

impl Timings {
    pub fn zeroed(&self) -> Timings {
        Timings {
            per_iteration: vec![0.0; self.per_iteration.len()],
            ..Timings::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Non-dominated members of the final archive, in archive order.
    pub archive: Vec<Candidate>,
    pub snapshots: Vec<Snapshot>,
    pub timings: Timings,
    pub evaluations: usize,
}

pub fn init_population(cfg: &EngineConfig) -> Result<Vec<Candidate>> {
    cfg.genome_bounds.check()?;
    let mut rng = stream_rng(cfg.seed, 0, rng::INIT_SLOT);
    Ok((0..cfg.population_size)
        .map(|_| Candidate::new(variation::uniform_genome(cfg.genome_len, cfg.genome_bounds, &mut rng)))
        .collect())
}

fn evaluate_all<E: Evaluator>(
    evaluator: &E,
    pop: &mut [Candidate],
    iteration: usize,
    parallel: bool,
) -> Result<()> {
    let eval = |(i, c): (usize, &Candidate)| {
        evaluator
            .evaluate(&c.genome)
            .map_err(|source| EngineError::Evaluation {
                iteration,
                candidate: i,
                source,
            })
    };
    let results: Vec<Result<ObjectiveVector>> = if parallel {
        pop.par_iter().enumerate().map(eval).collect()
    } else {
        pop.iter().enumerate().map(eval).collect()
    };
    for (c, r) in pop.iter_mut().zip(results) {
        c.objectives = Some(r?);
    }
    Ok(())
}

fn snapshot(iteration: usize, archive: &[Candidate]) -> Snapshot {
    Snapshot {
        iteration,
        objectives: archive.iter().map(|c| c.values().to_vec()).collect(),
        penalized: archive.iter().map(Candidate::is_penalized).collect(),
    }
}

/// Runs SPEA2 with parallel objective evaluation.
pub fn run<E: Evaluator>(cfg: &EngineConfig, evaluator: &E, snapshot_every: usize) -> Result<RunOutcome> {
    run_with(cfg, evaluator, snapshot_every, true)
}

/// Runs SPEA2; `parallel` only affects scheduling, never the result.
///
/// Iterations are numbered `1..=G`. A snapshot of the archive is recorded at
/// every iteration divisible by `snapshot_every` and at the last one.
pub fn run_with<E: Evaluator>(
    cfg: &EngineConfig,
    evaluator: &E,
    snapshot_every: usize,
    parallel: bool,
) -> Result<RunOutcome> {
    let mut violations = cfg.violations();
    if snapshot_every == 0 {
        violations.push("snapshot_every: must be positive".to_string());
    }
    if !violations.is_empty() {
        return Err(EngineError::InvalidConfig(violations));
    }
    if evaluator.genome_len() != cfg.genome_len {
        return Err(EngineError::Dimension {
            expected: evaluator.genome_len(),
            found: cfg.genome_len,
        });
    }

    let start = Instant::now();
    let mut timings = Timings::default();
    let mut snapshots = Vec::new();
    let mut evaluations = 0;

    let mut population = init_population(cfg)?;
    let mut archive: Vec<Candidate> = Vec::new();

    for iteration in 1..=cfg.max_iterations {
        let iter_start = Instant::now();

        let t = Instant::now();
        evaluate_all(evaluator, &mut population, iteration, parallel)?;
        evaluations += population.len();
        timings.evaluation += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let mut pool = std::mem::take(&mut population);
        pool.append(&mut archive);
        assign_fitness(&mut pool)?;
        archive = environmental_selection(pool, cfg.archive_size)?;
        timings.selection += t.elapsed().as_secs_f64();

        if iteration % snapshot_every == 0 || iteration == cfg.max_iterations {
            snapshots.push(snapshot(iteration, &archive));
        }

        if iteration < cfg.max_iterations {
            let t = Instant::now();
            population = breed(cfg, &archive, iteration)?;
            timings.variation += t.elapsed().as_secs_f64();
        }
        timings.per_iteration.push(iter_start.elapsed().as_secs_f64());
    }

    let keep = non_dominated_indices(&archive)?;
    let archive = keep.into_iter().map(|i| archive[i].clone()).collect();
    timings.total = start.elapsed().as_secs_f64();
    Ok(RunOutcome {
        archive,
        snapshots,
        timings,
        evaluations,
    })
}

fn breed(cfg: &EngineConfig, archive: &[Candidate], iteration: usize) -> Result<Vec<Candidate>> {
    let b = cfg.population_size;
    let mut mating = stream_rng(cfg.seed, iteration, rng::MATING_SLOT);
    let winners = binary_tournament(archive, b, &mut mating)?;
    let n_cross = cfg.crossover_children().min(b);
    let mut next = Vec::with_capacity(b);
    for slot in 0..b {
        let mut r = stream_rng(cfg.seed, iteration, slot as u32);
        let genome = if slot < n_cross {
            let p1 = &archive[winners[(2 * slot) % b]].genome;
            let p2 = &archive[winners[(2 * slot + 1) % b]].genome;
            crossover(p1, p2, &mut r)?
        } else {
            mutate(
                &archive[winners[slot]].genome,
                cfg.mutation_sigma,
                cfg.genome_bounds,
                &mut r,
            )
        };
        next.push(Candidate::new(genome));
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two conflicting quadratics with a known front `x ∈ [0, 1]`.
    struct Schaffer;

    impl Evaluator for Schaffer {
        fn genome_len(&self) -> usize {
            1
        }
        fn objective_count(&self) -> usize {
            2
        }
        fn evaluate(&self, g: &[f64]) -> Result<ObjectiveVector, CriteriaError> {
            Ok(ObjectiveVector::new(vec![g[0] * g[0], (g[0] - 1.0).powi(2)]))
        }
    }

    fn schaffer_cfg(seed: u64) -> EngineConfig {
        EngineConfig {
            genome_len: 1,
            seed,
            max_iterations: 30,
            ..EngineConfig::default()
        }
    }

    #[test]
    fn converges_onto_known_front() {
        let out = run(&schaffer_cfg(4), &Schaffer, 10).unwrap();
        assert!(!out.archive.is_empty() && out.archive.len() <= 50);
        for c in &out.archive {
            assert!((-1e-3..=1.0 + 1e-3).contains(&c.genome[0]), "{}", c.genome[0]);
        }
        let iters: Vec<usize> = out.snapshots.iter().map(|s| s.iteration).collect();
        assert_eq!(iters, vec![10, 20, 30]);
        assert_eq!(out.evaluations, 30 * 100);
    }

    #[test]
    fn single_iteration_has_one_snapshot() {
        let cfg = EngineConfig {
            max_iterations: 1,
            ..schaffer_cfg(1)
        };
        let out = run(&cfg, &Schaffer, 5).unwrap();
        assert_eq!(out.snapshots.len(), 1);
        assert_eq!(out.snapshots[0].iteration, 1);
        assert!(!out.archive.is_empty());
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let a = run_with(&schaffer_cfg(9), &Schaffer, 3, true).unwrap();
        let b = run_with(&schaffer_cfg(9), &Schaffer, 3, false).unwrap();
        assert_eq!(a.archive, b.archive);
        assert_eq!(a.snapshots, b.snapshots);
    }

    #[test]
    fn config_validation_lists_everything() {
        let cfg = EngineConfig {
            population_size: 10,
            archive_size: 20,
            crossover_rate: 1.5,
            ..EngineConfig::default()
        };
        match cfg.validate() {
            Err(EngineError::InvalidConfig(v)) => assert_eq!(v.len(), 2, "{v:?}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            run(&schaffer_cfg(0), &Schaffer, 0),
            Err(EngineError::InvalidConfig(_))
        ));
        let wrong_len = EngineConfig {
            genome_len: 4,
            ..schaffer_cfg(0)
        };
        assert!(matches!(
            run(&wrong_len, &Schaffer, 1),
            Err(EngineError::Dimension { .. })
        ));
    }

    struct Failing;

    impl Evaluator for Failing {
        fn genome_len(&self) -> usize {
            1
        }
        fn objective_count(&self) -> usize {
            1
        }
        fn evaluate(&self, g: &[f64]) -> Result<ObjectiveVector, CriteriaError> {
            if g[0] > 1.5 {
                Err(CriteriaError::ZeroEstimate(0))
            } else {
                Ok(ObjectiveVector::new(vec![g[0]]))
            }
        }
    }

    #[test]
    fn evaluator_failure_reports_context() {
        match run(&schaffer_cfg(2), &Failing, 1) {
            Err(EngineError::Evaluation {
                iteration,
                candidate,
                ..
            }) => {
                assert_eq!(iteration, 1);
                assert!(candidate < 100);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn init_population_contract() {
        let cfg = EngineConfig::default();
        let a = init_population(&cfg).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a, init_population(&cfg).unwrap());
        assert!(a.iter().flat_map(|c| &c.genome).all(|g| (-2.0..=2.0).contains(g)));
        let bad = EngineConfig {
            genome_bounds: Bounds {
                lower: 1.0,
                upper: 1.0,
            },
            ..cfg
        };
        assert!(matches!(
            init_population(&bad),
            Err(EngineError::DegenerateBounds(..))
        ));
    }
}
