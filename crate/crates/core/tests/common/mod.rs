#![allow(dead_code)]

use mobss::criteria::CriterionSpec;
use mobss::signal::{mix, synthetic_pair, MixingConfig, SignalMatrix};

pub const TAU: usize = 193;

pub fn specs() -> Vec<CriterionSpec> {
    vec![CriterionSpec::TimeCorrelation { lag: TAU }, CriterionSpec::Sparsity]
}

/// Default synthetic pair and its mixtures.
pub fn problem(seed: u64, snr_db: Option<f64>) -> (SignalMatrix, SignalMatrix) {
    let s = synthetic_pair(TAU, 512, 4096, seed).unwrap();
    let cfg = MixingConfig {
        snr_db,
        noise_seed: seed,
        ..MixingConfig::default()
    };
    let x = mix(&s, &cfg).unwrap();
    (s, x)
}

/// Plain Nelder-Mead on `f`, restarted from its own optimum until the
/// improvement stalls.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, start: &[f64], step: f64) -> (Vec<f64>, f64) {
    let mut best = start.to_vec();
    let mut best_v = f(&best);
    let mut step = step;
    for _ in 0..20 {
        let (x, v) = nelder_mead_once(&f, &best, step, 4000);
        let gain = best_v - v;
        best = x;
        best_v = v;
        step *= 0.5;
        if gain.abs() < 1e-15 {
            break;
        }
    }
    (best, best_v)
}

fn nelder_mead_once(f: &impl Fn(&[f64]) -> f64, start: &[f64], step: f64, iters: usize) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = (0..=n)
        .map(|i| {
            let mut p = start.to_vec();
            if i > 0 {
                p[i - 1] += step;
            }
            let v = f(&p);
            (p, v)
        })
        .collect();
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[n].1 - simplex[0].1).abs() < 1e-16 {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|p| p.0[d]).sum::<f64>() / n as f64)
            .collect();
        let toward = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let r = toward(-1.0);
        let fr = f(&r);
        if fr < simplex[0].1 {
            let e = toward(-2.0);
            let fe = f(&e);
            simplex[n] = if fe < fr { (e, fe) } else { (r, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (r, fr);
        } else {
            let c = if fr < simplex[n].1 { toward(-0.5) } else { toward(0.5) };
            let fc = f(&c);
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (c, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    p.0 = p.0.iter().zip(&best).map(|(x, b)| b + 0.5 * (x - b)).collect();
                    p.1 = f(&p.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}
