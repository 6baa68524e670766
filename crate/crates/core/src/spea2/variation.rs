use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{Bounds, EngineError, Result};

pub(crate) fn uniform_genome<R: Rng>(len: usize, bounds: Bounds, rng: &mut R) -> Vec<f64> {
    (0..len)
        .map(|_| rng.random_range(bounds.lower..=bounds.upper))
        .collect()
}

/// Whole-arithmetic blend `u·g1 + (1-u)·g2` with one `u ~ U[0, 1)` per child.
pub fn crossover<R: Rng>(p1: &[f64], p2: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if p1.len() != p2.len() {
        return Err(EngineError::LengthMismatch(p1.len(), p2.len()));
    }
    let u: f64 = rng.random();
    Ok(p1
        .iter()
        .zip(p2)
        .map(|(a, b)| {
            let g = u * a + (1.0 - u) * b;
            g.clamp(a.min(*b), a.max(*b))
        })
        .collect())
}

/// Adds `N(0, sigma²)` to every gene and clamps to `bounds`.
pub fn mutate<R: Rng>(genome: &[f64], sigma: f64, bounds: Bounds, rng: &mut R) -> Vec<f64> {
    if sigma == 0.0 {
        return genome.to_vec();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    genome
        .iter()
        .map(|g| bounds.clamp(g + normal.sample(rng)))
        .collect()
}
