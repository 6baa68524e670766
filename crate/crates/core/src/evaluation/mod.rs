//! Supervised scoring: alignment, pairing, SIR, archive reports and
//! composite solutions.

mod sweep;

use std::fmt;

use serde::de::Deserializer;
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{self, BaselineError};
use crate::signal::{self, SeparationMatrix, SignalError, SignalMatrix};

pub use sweep::{repetition_config, run_cell, snr_sweep, CellFailure, Series, SweepCell, SweepResult};

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("source has zero power")]
    ZeroSourcePower,
    #[error("empty archive")]
    EmptyArchive,
    #[error("order_by {index} out of range for {count} objectives")]
    OrderBy { index: usize, count: usize },
    #[error("invalid picks: {}", .0.join("; "))]
    InvalidPicks(Vec<String>),
    #[error("{0}")]
    Sweep(String),
}

pub type Result<T, E = EvaluationError> = std::result::Result<T, E>;

/// Residual powers at or below this fraction of the source power are at the
/// floating-point floor and count as perfect recovery.
pub const PERFECT_RESIDUAL_RATIO: f64 = 1e-24;

/// Value written for a perfect SIR in CSV tables, which must stay numeric.
pub const CSV_SIR_CEILING_DB: f64 = 300.0;

/// SIR in decibels; `+∞` marks perfect recovery and NaN a missing value.
///
/// Serialises as `{"db": 42.1, "perfect": false}` or `{"db": null, "perfect": true}`;
/// a missing value is `{"db": null, "perfect": false}`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Sir(pub f64);

impl Sir {
    pub fn db(self) -> f64 {
        self.0
    }

    pub fn is_perfect(self) -> bool {
        self.0 == f64::INFINITY
    }

    pub fn csv_value(self) -> f64 {
        if self.is_perfect() {
            CSV_SIR_CEILING_DB
        } else {
            self.0
        }
    }
}

impl fmt::Display for Sir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_perfect() {
            f.write_str("perfect")
        } else {
            write!(f, "{:.2} dB", self.0)
        }
    }
}

impl Serialize for Sir {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Sir", 2)?;
        let db = if self.0.is_finite() { Some(self.0) } else { None };
        st.serialize_field("db", &db)?;
        st.serialize_field("perfect", &self.is_perfect())?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Sir {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            db: Option<f64>,
            perfect: bool,
        }
        let raw = Raw::deserialize(d)?;
        match (raw.perfect, raw.db) {
            (true, None) => Ok(Sir(f64::INFINITY)),
            (false, Some(v)) => Ok(Sir(v)),
            (false, None) => Ok(Sir(f64::NAN)),
            (true, Some(_)) => Err(serde::de::Error::custom("sir: a perfect value has no db")),
        }
    }
}

fn sirs(v: &[f64]) -> Vec<Sir> {
    v.iter().copied().map(Sir).collect()
}

/// Standardises the estimate and flips its sign to match the source.
pub fn align(source: &[f64], estimate: &[f64]) -> Result<Vec<f64>> {
    let r = signal::pearson(source, estimate)?;
    let z = signal::standardize(estimate)?;
    Ok(if r < 0.0 { z.into_iter().map(|v| -v).collect() } else { z })
}

/// `10·log10(E[s²] / E[(s-y)²])` on already aligned inputs.
pub fn sir(source: &[f64], estimate: &[f64]) -> Result<f64> {
    if source.len() != estimate.len() {
        return Err(SignalError::DimensionMismatch {
            what: "sir input lengths",
            expected: source.len(),
            found: estimate.len(),
        }
        .into());
    }
    let power = signal::mean(&source.iter().map(|v| v * v).collect::<Vec<_>>());
    if power == 0.0 {
        return Err(EvaluationError::ZeroSourcePower);
    }
    let residual = source
        .iter()
        .zip(estimate)
        .map(|(s, y)| (s - y) * (s - y))
        .sum::<f64>()
        / source.len() as f64;
    if residual <= power * PERFECT_RESIDUAL_RATIO {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (power / residual).log10())
}

/// SIR after standardising the source and aligning the estimate.
pub fn aligned_sir(source: &[f64], estimate: &[f64]) -> Result<f64> {
    let s = signal::standardize(source)?;
    let y = align(source, estimate)?;
    sir(&s, &y)
}

/// `perm[i]` is the estimate paired with source `i`; pairs are taken greedily
/// by decreasing `|pearson|`.
pub fn pair_sources(sources: &SignalMatrix, estimates: &SignalMatrix) -> Result<Vec<usize>> {
    let n = sources.channels();
    if estimates.channels() != n {
        return Err(SignalError::DimensionMismatch {
            what: "estimate vs source channels",
            expected: n,
            found: estimates.channels(),
        }
        .into());
    }
    let mut corr = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            corr[i * n + j] = signal::pearson(sources.row(i), estimates.row(j))?.abs();
        }
    }
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for _ in 0..n {
        let mut best: Option<(usize, usize)> = None;
        for i in (0..n).filter(|&i| perm[i] == usize::MAX) {
            for j in (0..n).filter(|&j| !used[j]) {
                if best.is_none_or(|(bi, bj)| corr[i * n + j] > corr[bi * n + bj]) {
                    best = Some((i, j));
                }
            }
        }
        let (i, j) = best.expect("unpaired channels remain");
        perm[i] = j;
        used[j] = true;
    }
    Ok(perm)
}

/// Per-source SIR of one separation matrix after pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionScore {
    pub permutation: Vec<usize>,
    pub sir: Vec<f64>,
}

impl SolutionScore {
    pub fn mean(&self) -> f64 {
        mean_sir(&self.sir)
    }
}

/// Mean of per-source SIRs; `+∞` if any source is perfect.
pub fn mean_sir(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn score_solution(
    w: &SeparationMatrix,
    sources: &SignalMatrix,
    mixtures: &SignalMatrix,
) -> Result<SolutionScore> {
    let y = signal::separate(mixtures, w)?;
    if y.samples() != sources.samples() {
        return Err(SignalError::DimensionMismatch {
            what: "source vs mixture sample counts",
            expected: mixtures.samples(),
            found: sources.samples(),
        }
        .into());
    }
    let permutation = pair_sources(sources, &y)?;
    let sir = permutation
        .iter()
        .enumerate()
        .map(|(i, &j)| aligned_sir(sources.row(i), y.row(j)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SolutionScore { permutation, sir })
}

/// An archive member as seen by the evaluation code.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub w: SeparationMatrix,
    pub objectives: Vec<f64>,
}

/// Row `row` of member `member` becomes output row `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pick {
    pub target: usize,
    pub member: usize,
    pub row: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedSolution {
    pub w: SeparationMatrix,
    pub sir: Vec<Sir>,
    pub picks: Vec<Pick>,
}

/// For every source, the row (over all members) whose estimate has the
/// highest SIR; first member wins ties.
pub fn combine_best(
    archive: &[SeparationMatrix],
    sources: &SignalMatrix,
    mixtures: &SignalMatrix,
) -> Result<CombinedSolution> {
    let scores = archive
        .iter()
        .map(|w| score_solution(w, sources, mixtures))
        .collect::<Result<Vec<_>>>()?;
    combine_scored(archive, &scores)
}

fn combine_scored(archive: &[SeparationMatrix], scores: &[SolutionScore]) -> Result<CombinedSolution> {
    if archive.is_empty() {
        return Err(EvaluationError::EmptyArchive);
    }
    let n = scores[0].sir.len();
    let mut picks = Vec::with_capacity(n);
    let mut best_sir = Vec::with_capacity(n);
    for target in 0..n {
        let mut member = 0;
        for m in 1..scores.len() {
            if scores[m].sir[target] > scores[member].sir[target] {
                member = m;
            }
        }
        picks.push(Pick {
            target,
            member,
            row: scores[member].permutation[target],
        });
        best_sir.push(scores[member].sir[target]);
    }
    let w = user_combine(archive, &picks)?;
    Ok(CombinedSolution {
        w,
        sir: sirs(&best_sir),
        picks,
    })
}

/// Assembles a composite matrix from explicit picks, one per output row.
pub fn user_combine(archive: &[SeparationMatrix], picks: &[Pick]) -> Result<SeparationMatrix> {
    let mut problems = Vec::new();
    let Some(first) = archive.first() else {
        return Err(EvaluationError::EmptyArchive);
    };
    let n = first.nrows();
    let mut seen = vec![false; n];
    for p in picks {
        if p.target >= n {
            problems.push(format!("target {} out of range (0..{n})", p.target));
        } else if seen[p.target] {
            problems.push(format!("duplicate target {}", p.target));
        } else {
            seen[p.target] = true;
        }
        match archive.get(p.member) {
            None => problems.push(format!(
                "member {} out of range (archive has {})",
                p.member,
                archive.len()
            )),
            Some(w) if p.row >= w.nrows() => problems.push(format!(
                "row {} out of range for member {} ({} rows)",
                p.row,
                p.member,
                w.nrows()
            )),
            _ => {}
        }
    }
    for (t, ok) in seen.iter().enumerate() {
        if !ok && picks.iter().all(|p| p.target != t) {
            problems.push(format!("no pick for target {t}"));
        }
    }
    if !problems.is_empty() {
        return Err(EvaluationError::InvalidPicks(problems));
    }
    let mut rows = vec![Vec::new(); n];
    for p in picks {
        rows[p.target] = archive[p.member].row(p.row).to_vec();
    }
    Ok(SeparationMatrix::new(rows)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub label: String,
    pub w: SeparationMatrix,
    pub sir: Vec<Sir>,
    pub mean_sir: Sir,
    /// Seconds spent computing `w`.
    #[serde(default)]
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub order_by: usize,
    pub objectives: Vec<Vec<f64>>,
    pub per_solution_sir: Vec<Vec<Sir>>,
    pub mean_sir: Vec<Sir>,
    pub ordering: Vec<usize>,
    pub best_index: usize,
    pub worst_index: usize,
    pub combined: CombinedSolution,
    pub mse: ReferenceSolution,
    #[serde(default)]
    pub mono: Vec<ReferenceSolution>,
}

impl EvaluationReport {
    pub fn combined_mean(&self) -> f64 {
        mean_sir(&self.combined.sir.iter().map(|s| s.0).collect::<Vec<_>>())
    }

    pub fn best_mean(&self) -> f64 {
        self.mean_sir[self.best_index].0
    }

    /// SIR of source `source` along the criterion ordering.
    pub fn ordered_series(&self, source: usize) -> Vec<f64> {
        self.ordering
            .iter()
            .map(|&m| self.per_solution_sir[m][source].0)
            .collect()
    }
}

/// Stable ascending argsort of the members by objective `order_by`.
pub fn order_members(objectives: &[Vec<f64>], order_by: usize) -> Result<Vec<usize>> {
    let count = objectives.first().map_or(0, Vec::len);
    if order_by >= count || objectives.iter().any(|o| o.len() != count) {
        return Err(EvaluationError::OrderBy {
            index: order_by,
            count,
        });
    }
    let mut idx: Vec<usize> = (0..objectives.len()).collect();
    idx.sort_by(|&a, &b| objectives[a][order_by].total_cmp(&objectives[b][order_by]));
    Ok(idx)
}

pub fn reference(label: &str, w: SeparationMatrix, sources: &SignalMatrix, mixtures: &SignalMatrix) -> Result<ReferenceSolution> {
    let score = score_solution(&w, sources, mixtures)?;
    Ok(ReferenceSolution {
        label: label.to_string(),
        w,
        mean_sir: Sir(score.mean()),
        sir: sirs(&score.sir),
        wall_time: 0.0,
    })
}

/// Scores every archive member and the MSE benchmark.
pub fn evaluate_archive(
    archive: &[Member],
    sources: &SignalMatrix,
    mixtures: &SignalMatrix,
    order_by: usize,
) -> Result<EvaluationReport> {
    if archive.is_empty() {
        return Err(EvaluationError::EmptyArchive);
    }
    let objectives: Vec<Vec<f64>> = archive.iter().map(|m| m.objectives.clone()).collect();
    let ordering = order_members(&objectives, order_by)?;
    let matrices: Vec<SeparationMatrix> = archive.iter().map(|m| m.w.clone()).collect();
    let scores = matrices
        .iter()
        .map(|w| score_solution(w, sources, mixtures))
        .collect::<Result<Vec<_>>>()?;
    let means: Vec<f64> = scores.iter().map(SolutionScore::mean).collect();
    let mut best_index = 0;
    let mut worst_index = 0;
    for (i, &m) in means.iter().enumerate() {
        if m > means[best_index] {
            best_index = i;
        }
        if m < means[worst_index] {
            worst_index = i;
        }
    }
    let combined = combine_scored(&matrices, &scores)?;
    let mse = baselines::mse_solution(sources, mixtures)?;
    Ok(EvaluationReport {
        order_by,
        objectives,
        per_solution_sir: scores.iter().map(|s| sirs(&s.sir)).collect(),
        mean_sir: sirs(&means),
        ordering,
        best_index,
        worst_index,
        combined,
        mse: ReferenceSolution {
            wall_time: mse.wall_time,
            ..reference("mse", mse.w, sources, mixtures)?
        },
        mono: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: Vec<Vec<f64>>) -> SignalMatrix {
        SignalMatrix::with_prefix("s", rows).unwrap()
    }

    #[test]
    fn align_removes_affine_ambiguity() {
        let s = [0.5, 1.0, -2.0, 3.0, 0.0];
        let y: Vec<f64> = s.iter().map(|v| -2.0 * v + 3.0).collect();
        let a = align(&s, &y).unwrap();
        let z = signal::standardize(&s).unwrap();
        for (p, q) in a.iter().zip(&z) {
            assert!((p - q).abs() < 1e-10);
        }
        for (p, q) in align(&z, &z).unwrap().iter().zip(&z) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn sir_examples() {
        let s = [1.0, -1.0, 1.0, -1.0];
        assert_eq!(sir(&s, &s).unwrap(), f64::INFINITY);
        let y: Vec<f64> = s.iter().map(|v| v * 1.1).collect();
        assert!((sir(&s, &y).unwrap() - 20.0).abs() < 1e-12);
        let zero = [0.0; 4];
        assert!(sir(&s, &zero).unwrap().abs() < 1e-12);
        assert!(matches!(sir(&zero, &s), Err(EvaluationError::ZeroSourcePower)));
    }

    #[test]
    fn sir_serialization() {
        let v = serde_json::to_string(&[Sir(12.5), Sir(f64::INFINITY)]).unwrap();
        assert_eq!(v, r#"[{"db":12.5,"perfect":false},{"db":null,"perfect":true}]"#);
        let back: Vec<Sir> = serde_json::from_str(&v).unwrap();
        assert_eq!(back, vec![Sir(12.5), Sir(f64::INFINITY)]);
        assert!(serde_json::from_str::<Sir>(r#"{"db":null,"perfect":false}"#).unwrap().0.is_nan());
        assert!(serde_json::from_str::<Sir>(r#"{"db":3.0,"perfect":true}"#).is_err());
    }

    #[test]
    fn pairing_examples() {
        let s = m(vec![vec![1.0, 0.0, 2.0, 5.0], vec![0.0, 3.0, 1.0, 1.0]]);
        let swapped = s.select(&[1, 0]).unwrap();
        assert_eq!(pair_sources(&s, &s).unwrap(), vec![0, 1]);
        assert_eq!(pair_sources(&s, &swapped).unwrap(), vec![1, 0]);
        let constant = m(vec![vec![1.0; 4], vec![0.0, 3.0, 1.0, 1.0]]);
        assert!(pair_sources(&s, &constant).is_err());
    }

    #[test]
    fn picks_are_validated() {
        let a = SeparationMatrix::identity(2);
        let b = SeparationMatrix::new(vec![vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let all_a = [Pick { target: 0, member: 0, row: 0 }, Pick { target: 1, member: 0, row: 1 }];
        assert_eq!(user_combine(&[a.clone(), b.clone()], &all_a).unwrap(), a);
        let mixed = [Pick { target: 0, member: 1, row: 1 }, Pick { target: 1, member: 0, row: 1 }];
        assert_eq!(
            user_combine(&[a.clone(), b.clone()], &mixed).unwrap().rows(),
            &[vec![1.0, -1.0], vec![0.0, 1.0]]
        );
        let bad = [Pick { target: 0, member: 7, row: 0 }, Pick { target: 0, member: 0, row: 3 }];
        match user_combine(&[a, b], &bad) {
            Err(EvaluationError::InvalidPicks(p)) => {
                let all = p.join("|");
                assert!(all.contains("member 7"), "{all}");
                assert!(all.contains("duplicate target 0"), "{all}");
                assert!(all.contains("row 3"), "{all}");
                assert!(all.contains("no pick for target 1"), "{all}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ordering_is_stable_and_validated() {
        let obj = vec![vec![2.0, 0.0], vec![1.0, 5.0], vec![2.0, -1.0]];
        assert_eq!(order_members(&obj, 0).unwrap(), vec![1, 0, 2]);
        assert_eq!(order_members(&obj, 1).unwrap(), vec![2, 0, 1]);
        assert!(order_members(&obj, 2).is_err());
    }
}
