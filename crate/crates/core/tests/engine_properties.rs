use mobss::criteria::{CriteriaError, ObjectiveVector};
use mobss::spea2::{
    assign_fitness, binary_tournament, dominates, environmental_selection, init_population,
    non_dominated_indices, run, run_with, stream_rng, Candidate, EngineConfig, EngineError,
    Evaluator,
};
use proptest::prelude::*;

fn ov(v: &[f64]) -> ObjectiveVector {
    ObjectiveVector::new(v.to_vec())
}

/// Candidates whose genome stores their pool index.
fn pool(points: &[Vec<f64>]) -> Vec<Candidate> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| Candidate::evaluated(vec![i as f64], ov(p)))
        .collect()
}

fn scored(points: &[Vec<f64>]) -> Vec<Candidate> {
    let mut p = pool(points);
    assign_fitness(&mut p).unwrap();
    p
}

fn ids(c: &[Candidate]) -> Vec<usize> {
    c.iter().map(|c| c.genome[0] as usize).collect()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn dom(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Strength, raw fitness and density written straight from their definitions.
fn fitness_oracle(points: &[Vec<f64>]) -> Vec<(usize, f64, f64)> {
    let n = points.len();
    let s: Vec<usize> = (0..n)
        .map(|i| (0..n).filter(|&j| dom(&points[i], &points[j])).count())
        .collect();
    let k = (n as f64).sqrt().floor() as usize;
    (0..n)
        .map(|i| {
            let r: usize = (0..n).filter(|&j| dom(&points[j], &points[i])).map(|j| s[j]).sum();
            let mut d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| euclid(&points[i], &points[j])).collect();
            d.sort_by(f64::total_cmp);
            let sigma = if d.is_empty() { f64::INFINITY } else { d[k.clamp(1, d.len()) - 1] };
            (s[i], r as f64, r as f64 + 1.0 / (sigma + 2.0))
        })
        .collect()
}

/// Truncation recomputed from scratch at every removal.
fn truncation_oracle(points: &[Vec<f64>], size: usize) -> Vec<usize> {
    let n = points.len();
    let m = points[0].len();
    let mut ext: Vec<usize> = (0..m)
        .map(|o| {
            let mut b = 0;
            for i in 1..n {
                if points[i][o] < points[b][o] {
                    b = i;
                }
            }
            b
        })
        .collect();
    ext.sort_unstable();
    ext.dedup();
    let protect = ext.len() <= size;
    let mut alive: Vec<usize> = (0..n).collect();
    while alive.len() > size {
        let mut best: Option<(usize, Vec<f64>)> = None;
        for &i in &alive {
            if protect && ext.contains(&i) {
                continue;
            }
            let mut d: Vec<f64> = alive.iter().filter(|&&j| j != i).map(|&j| euclid(&points[i], &points[j])).collect();
            d.sort_by(f64::total_cmp);
            let smaller = match &best {
                None => true,
                Some((_, bd)) => d.iter().zip(bd).find(|(a, b)| a != b).is_some_and(|(a, b)| a < b),
            };
            if smaller {
                best = Some((i, d));
            }
        }
        let victim = best.unwrap().0;
        alive.retain(|&j| j != victim);
    }
    alive
}

struct Schaffer2;

impl Evaluator for Schaffer2 {
    fn genome_len(&self) -> usize {
        2
    }
    fn objective_count(&self) -> usize {
        2
    }
    fn evaluate(&self, g: &[f64]) -> Result<ObjectiveVector, CriteriaError> {
        Ok(ov(&[g[0] * g[0] + g[1] * g[1], (g[0] - 1.0).powi(2) + g[1] * g[1]]))
    }
}

fn toy_cfg(seed: u64) -> EngineConfig {
    EngineConfig {
        population_size: 40,
        archive_size: 12,
        max_iterations: 25,
        genome_len: 2,
        seed,
        ..EngineConfig::default()
    }
}

fn points_strategy(min: usize, max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    // A coarse grid forces ties and duplicates.
    prop::collection::vec(prop::collection::vec((0u8..8).prop_map(|v| v as f64 * 0.5), 2), min..max)
}

fn front_strategy(min: usize, max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(0.0f64..1.0, min..max).prop_map(|xs| {
        let mut xs = xs;
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.iter().map(|&x| vec![x, (1.0 - x).powi(2)]).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dominance_is_a_strict_partial_order(
        a in prop::collection::vec(-3i8..3, 3),
        b in prop::collection::vec(-3i8..3, 3),
        c in prop::collection::vec(-3i8..3, 3),
    ) {
        let (a, b, c) = (
            ov(&a.iter().map(|&v| v as f64).collect::<Vec<_>>()),
            ov(&b.iter().map(|&v| v as f64).collect::<Vec<_>>()),
            ov(&c.iter().map(|&v| v as f64).collect::<Vec<_>>()),
        );
        prop_assert!(!dominates(&a, &a).unwrap());
        if dominates(&a, &b).unwrap() {
            prop_assert!(!dominates(&b, &a).unwrap());
            if dominates(&b, &c).unwrap() {
                prop_assert!(dominates(&a, &c).unwrap());
            }
        }
    }

    #[test]
    fn fitness_matches_definition(points in points_strategy(1, 30)) {
        let p = scored(&points);
        for (c, (s, r, f)) in p.iter().zip(fitness_oracle(&points)) {
            prop_assert_eq!(c.strength, s);
            prop_assert_eq!(c.raw_fitness, r);
            prop_assert!((c.fitness - f).abs() < 1e-12);
        }
    }

    #[test]
    fn fitness_below_one_iff_non_dominated(points in points_strategy(1, 30)) {
        let p = scored(&points);
        let nd = non_dominated_indices(&p).unwrap();
        for (i, c) in p.iter().enumerate() {
            prop_assert_eq!(c.fitness < 1.0, nd.contains(&i));
        }
    }

    #[test]
    fn selection_size_and_fill_order(points in points_strategy(1, 40), size in 1usize..25) {
        let p = scored(&points);
        let a = environmental_selection(p.clone(), size).unwrap();
        prop_assert_eq!(a.len(), size.min(points.len()));
        let nd = non_dominated_indices(&p).unwrap();
        let kept = ids(&a);
        if nd.len() <= size {
            for i in &nd {
                prop_assert!(kept.contains(i));
            }
            let worst_kept = a.iter().map(|c| c.fitness).fold(f64::MIN, f64::max);
            for c in p.iter().filter(|c| !kept.contains(&(c.genome[0] as usize))) {
                prop_assert!(c.fitness >= worst_kept);
            }
        } else {
            for i in &kept {
                prop_assert!(nd.contains(i));
            }
        }
    }

    #[test]
    fn truncation_leaves_no_dominance(points in front_strategy(6, 40), size in 2usize..6) {
        let a = environmental_selection(scored(&points), size).unwrap();
        for x in &a {
            for y in &a {
                prop_assert!(!dominates(x.objectives.as_ref().unwrap(), y.objectives.as_ref().unwrap()).unwrap());
            }
        }
    }

    #[test]
    fn truncation_matches_exhaustive_oracle(points in front_strategy(3, 30), size in 2usize..10) {
        prop_assume!(points.len() > size);
        let a = environmental_selection(scored(&points), size).unwrap();
        prop_assert_eq!(ids(&a), truncation_oracle(&points, size));
    }

    #[test]
    fn truncation_keeps_per_objective_minimisers(points in front_strategy(4, 40), size in 2usize..8) {
        let a = environmental_selection(scored(&points), size).unwrap();
        for o in 0..2 {
            let best = points.iter().map(|p| p[o]).fold(f64::INFINITY, f64::min);
            prop_assert!(a.iter().any(|c| c.values()[o] == best));
        }
    }

    #[test]
    fn tournament_returns_in_range_indices(points in points_strategy(1, 20), seed in 0u64..1000) {
        let p = scored(&points);
        let w = binary_tournament(&p, 50, &mut stream_rng(seed, 1, 7)).unwrap();
        prop_assert_eq!(w.len(), 50);
        prop_assert!(w.iter().all(|&i| i < p.len()));
    }
}

#[test]
fn clustered_pairs_keep_one_of_each_pair() {
    let mut points = Vec::new();
    for i in 0..10 {
        let x = i as f64;
        points.push(vec![x, 9.0 - x]);
        points.push(vec![x + 1e-3, 9.0 - x - 1e-3]);
    }
    let a = environmental_selection(scored(&points), 10).unwrap();
    let kept = ids(&a);
    assert_eq!(kept, truncation_oracle(&points, 10));
    for pair in 0..10 {
        let hits = kept.iter().filter(|&&i| i / 2 == pair).count();
        assert_eq!(hits, 1, "pair {pair}: {kept:?}");
    }
}

#[test]
fn small_front_is_filled_by_fitness() {
    let points = vec![
        vec![0.0, 4.0],
        vec![4.0, 0.0],
        vec![1.0, 5.0],
        vec![5.0, 1.0],
        vec![4.5, 4.5],
        vec![6.0, 6.0],
    ];
    let p = scored(&points);
    let a = environmental_selection(p.clone(), 4).unwrap();
    let kept = ids(&a);
    assert_eq!(&kept[..2], &[0, 1]);
    let mut rest: Vec<(f64, usize)> = p[2..].iter().map(|c| (c.fitness, c.genome[0] as usize)).collect();
    rest.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert_eq!(&kept[2..], &[rest[0].1, rest[1].1]);
    assert!(a[2..].iter().all(|c| c.fitness >= 1.0));
}

#[test]
fn archive_is_elitist_between_snapshots() {
    for seed in 0..4 {
        let out = run(&toy_cfg(seed), &Schaffer2, 1).unwrap();
        assert_eq!(out.snapshots.len(), 25);
        for pair in out.snapshots.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            for o in 0..2 {
                let a = prev.objectives.iter().map(|v| v[o]).fold(f64::INFINITY, f64::min);
                let b = next.objectives.iter().map(|v| v[o]).fold(f64::INFINITY, f64::min);
                assert!(b <= a, "seed {seed}: objective {o} rose from {a} to {b}");
            }
            let front_only = next
                .objectives
                .iter()
                .all(|y| !next.objectives.iter().any(|z| dom(z, y)));
            if front_only {
                for y in &next.objectives {
                    assert!(!prev.objectives.iter().any(|x| dom(x, y)));
                }
            }
        }
    }
}

#[test]
fn final_archive_is_bounded_and_non_dominated() {
    let out = run(&toy_cfg(9), &Schaffer2, 5).unwrap();
    assert!(!out.archive.is_empty() && out.archive.len() <= 12);
    for x in &out.archive {
        for y in &out.archive {
            assert!(!dom(x.values(), y.values()));
        }
        assert!(x.genome.iter().all(|g| (-2.0..=2.0).contains(g)));
    }
    assert_eq!(out.evaluations, 25 * 40);
    let iters: Vec<usize> = out.snapshots.iter().map(|s| s.iteration).collect();
    assert_eq!(iters, vec![5, 10, 15, 20, 25]);
}

#[test]
fn parallel_and_sequential_runs_agree() {
    let cfg = toy_cfg(11);
    let a = run_with(&cfg, &Schaffer2, 3, true).unwrap();
    let b = run_with(&cfg, &Schaffer2, 3, false).unwrap();
    assert_eq!(a.archive, b.archive);
    assert_eq!(a.snapshots, b.snapshots);
    let c = run_with(&toy_cfg(12), &Schaffer2, 3, false).unwrap();
    assert_ne!(a.snapshots, c.snapshots);
}

#[test]
fn initial_population_is_seeded_and_bounded() {
    let cfg = toy_cfg(3);
    let p = init_population(&cfg).unwrap();
    assert_eq!(p.len(), 40);
    assert!(p.iter().all(|c| c.genome.len() == 2 && c.objectives.is_none()));
    assert!(p.iter().flat_map(|c| &c.genome).all(|g| (-2.0..=2.0).contains(g)));
    assert_eq!(p, init_population(&cfg).unwrap());
}

#[test]
fn invalid_configs_are_rejected_with_every_reason() {
    let cfg = EngineConfig {
        population_size: 10,
        archive_size: 20,
        crossover_rate: 1.5,
        genome_len: 2,
        ..EngineConfig::default()
    };
    match run(&cfg, &Schaffer2, 0) {
        Err(EngineError::InvalidConfig(v)) => assert_eq!(v.len(), 3, "{v:?}"),
        other => panic!("unexpected {other:?}"),
    }
    let wrong_len = EngineConfig {
        genome_len: 3,
        ..toy_cfg(0)
    };
    assert!(matches!(
        run(&wrong_len, &Schaffer2, 1),
        Err(EngineError::Dimension { expected: 2, found: 3 })
    ));
}
