use super::{Candidate, EngineError, Result};
use crate::criteria::ObjectiveVector;

/// Pareto dominance for minimisation.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool> {
    if a.len() != b.len() {
        return Err(EngineError::LengthMismatch(a.len(), b.len()));
    }
    Ok(dominates_values(&a.values, &b.values))
}

pub(crate) fn dominates_values(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_evaluated(pool: &[Candidate]) -> Result<usize> {
    let mut k = None;
    for (index, c) in pool.iter().enumerate() {
        let obj = c.objectives.as_ref().ok_or(EngineError::Unevaluated { index })?;
        match k {
            None => k = Some(obj.len()),
            Some(k) if k != obj.len() => return Err(EngineError::LengthMismatch(k, obj.len())),
            _ => {}
        }
    }
    k.ok_or(EngineError::EmptyPool)
}

/// Indices of candidates not dominated by any other pool member.
pub fn non_dominated_indices(pool: &[Candidate]) -> Result<Vec<usize>> {
    if pool.is_empty() {
        return Ok(Vec::new());
    }
    check_evaluated(pool)?;
    Ok((0..pool.len())
        .filter(|&i| {
            !pool
                .iter()
                .any(|other| dominates_values(other.values(), pool[i].values()))
        })
        .collect())
}

/// Assigns strength `S`, raw fitness `R`, density `D` and `F = R + D`.
///
/// `S(i)` counts the members `i` dominates, `R(i)` sums `S(j)` over every
/// dominator `j` of `i`, and `D(i) = 1 / (σ_k + 2)` where `σ_k` is the
/// distance to the k-th nearest neighbour, `k = ⌊√n⌋`.
pub fn assign_fitness(pool: &mut [Candidate]) -> Result<()> {
    check_evaluated(pool)?;
    let n = pool.len();
    let mut dom = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                dom[i * n + j] = dominates_values(pool[i].values(), pool[j].values());
            }
        }
    }
    let strength: Vec<usize> = (0..n)
        .map(|i| (0..n).filter(|&j| dom[i * n + j]).count())
        .collect();
    let k = (n as f64).sqrt().floor() as usize;
    let mut dists = Vec::with_capacity(n);
    for i in 0..n {
        let raw: usize = (0..n).filter(|&j| dom[j * n + i]).map(|j| strength[j]).sum();
        dists.clear();
        dists.extend(
            (0..n)
                .filter(|&j| j != i)
                .map(|j| distance(pool[i].values(), pool[j].values())),
        );
        let sigma = if dists.is_empty() {
            f64::INFINITY
        } else {
            let idx = k.clamp(1, dists.len()) - 1;
            *dists.select_nth_unstable_by(idx, f64::total_cmp).1
        };
        let c = &mut pool[i];
        c.strength = strength[i];
        c.raw_fitness = raw as f64;
        c.density_distance = sigma;
        c.fitness = raw as f64 + 1.0 / (sigma + 2.0);
    }
    Ok(())
}
