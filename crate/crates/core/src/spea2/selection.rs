use std::cmp::Ordering;

use rand::Rng;

use super::fitness::distance;
use super::{Candidate, EngineError, Result};

/// Builds the next archive of exactly `min(size, pool.len())` members.
///
/// Members with fitness `< 1` (the non-dominated ones) are kept. A short
/// archive is topped up with the best dominated members by ascending
/// fitness; an oversized one is truncated by repeatedly dropping the member
/// whose sorted neighbour distances are lexicographically smallest. The
/// per-objective minimisers stay protected while that is possible.
pub fn environmental_selection(pool: Vec<Candidate>, size: usize) -> Result<Vec<Candidate>> {
    if size == 0 {
        return Err(EngineError::ZeroArchive);
    }
    let (mut front, mut rest): (Vec<Candidate>, Vec<Candidate>) =
        pool.into_iter().partition(|c| c.fitness < 1.0);
    if front.len() <= size {
        rest.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
        let missing = size - front.len();
        front.extend(rest.into_iter().take(missing));
        return Ok(front);
    }
    let keep = truncate(&front, size);
    let mut keep_mask = vec![false; front.len()];
    for i in keep {
        keep_mask[i] = true;
    }
    let mut mask = keep_mask.into_iter();
    front.retain(|_| mask.next().unwrap_or(false));
    Ok(front)
}

fn extremes(front: &[Candidate]) -> Vec<usize> {
    let k = front[0].values().len();
    let mut out: Vec<usize> = (0..k)
        .map(|obj| {
            let mut best = 0;
            for i in 1..front.len() {
                if front[i].values()[obj] < front[best].values()[obj] {
                    best = i;
                }
            }
            best
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn lexicographic(a: &[(f64, usize)], b: &[(f64, usize)]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.0.total_cmp(&y.0) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Indices of the members surviving truncation to `size`.
fn truncate(front: &[Candidate], size: usize) -> Vec<usize> {
    let n = front.len();
    let mut protected = vec![false; n];
    let ext = extremes(front);
    if ext.len() <= size {
        for i in ext {
            protected[i] = true;
        }
    }
    let mut neighbours: Vec<Vec<(f64, usize)>> = (0..n)
        .map(|i| {
            let mut v: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (distance(front[i].values(), front[j].values()), j))
                .collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            v
        })
        .collect();
    let mut alive = vec![true; n];
    let mut count = n;
    while count > size {
        let mut victim: Option<usize> = None;
        for i in (0..n).filter(|&i| alive[i] && !protected[i]) {
            victim = match victim {
                Some(v) if lexicographic(&neighbours[i], &neighbours[v]) != Ordering::Less => Some(v),
                _ => Some(i),
            };
        }
        let victim = victim.expect("fewer protected members than slots");
        alive[victim] = false;
        count -= 1;
        for (i, list) in neighbours.iter_mut().enumerate() {
            if alive[i] {
                if let Some(pos) = list.iter().position(|&(_, j)| j == victim) {
                    list.remove(pos);
                }
            }
        }
    }
    (0..n).filter(|&i| alive[i]).collect()
}

/// Indices of `count` binary-tournament winners drawn with replacement.
/// Lower fitness wins; ties go to the first draw.
pub fn binary_tournament<R: Rng>(archive: &[Candidate], count: usize, rng: &mut R) -> Result<Vec<usize>> {
    if archive.is_empty() {
        return Err(EngineError::EmptyArchive);
    }
    let n = archive.len();
    Ok((0..count)
        .map(|_| {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if archive[b].fitness < archive[a].fitness {
                b
            } else {
                a
            }
        })
        .collect())
}
