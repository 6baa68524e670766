use std::fs;

use mobss::evaluation::{combine_best, Pick};
use mobss::explorer::{CombinationRequest, Explorer, ExplorerError, RunStatus};
use mobss::harness::run_experiment;
use mobss::signal::separate;
use mobss::{RunArtifact, RunConfig};

fn artifact(seed: u64) -> RunArtifact {
    let mut cfg = RunConfig::default();
    cfg.engine.max_iterations = 15;
    cfg.engine.seed = seed;
    run_experiment(&cfg).unwrap()
}

fn explorer() -> (Explorer, RunArtifact) {
    let a = artifact(0);
    (Explorer::from_artifacts(vec![("r0".into(), a.clone())]), a)
}

#[test]
fn directory_listing_survives_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    assert!(Explorer::open(dir.path()).unwrap().list_runs().is_empty());
    artifact(1).write(&dir.path().join("b.artifact.json")).unwrap();
    artifact(2).write(&dir.path().join("a.artifact.json")).unwrap();
    fs::write(dir.path().join("c.artifact.json"), "not json").unwrap();
    fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let e = Explorer::open(dir.path()).unwrap();
    let runs = e.list_runs();
    let ids: Vec<&str> = runs.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, ["a", "b", "c"]);
    assert_eq!(runs[0].status, RunStatus::Ok);
    assert_eq!(runs[0].detected_tau, Some(193));
    assert!(runs[0].has_sources);
    assert_eq!(runs[2].status, RunStatus::LoadError);
    assert!(runs[2].error.is_some());
    assert!(matches!(e.get_front("c", 0), Err(ExplorerError::Unavailable { .. })));
    assert!(e.get_front("a", 0).is_ok());
    assert!(matches!(Explorer::open(&dir.path().join("missing")), Err(ExplorerError::Io { .. })));
}

#[test]
fn fronts_are_sorted_permutations() {
    let (e, a) = explorer();
    let n = a.final_archive.len();
    for k in 0..2 {
        let f = e.get_front("r0", k).unwrap();
        assert_eq!(f.order_by, k);
        let mut idx: Vec<usize> = f.entries.iter().map(|x| x.index).collect();
        idx.sort_unstable();
        assert_eq!(idx, (0..n).collect::<Vec<_>>());
        assert!(f.entries.windows(2).all(|w| w[0].objectives[k] <= w[1].objectives[k]));
        let min = a.final_archive.iter().map(|x| x.objectives[k]).fold(f64::INFINITY, f64::min);
        assert_eq!(f.entries[0].objectives[k], min);
        for entry in &f.entries {
            assert_eq!(entry.objectives, a.final_archive[entry.index].objectives);
        }
        assert_eq!(f.mse.as_ref().map(Vec::len), Some(2));
    }
    assert!(matches!(e.get_front("r0", 2), Err(ExplorerError::Invalid(_))));
    assert!(matches!(e.get_front("nope", 0), Err(ExplorerError::NotFound(_))));
}

#[test]
fn singleton_front() {
    let mut a = artifact(3);
    a.final_archive.truncate(1);
    let e = Explorer::from_artifacts(vec![("one".into(), a)]);
    for k in 0..2 {
        assert_eq!(e.get_front("one", k).unwrap().entries.len(), 1);
    }
}

#[test]
fn solutions_match_the_cli_path() {
    let (e, a) = explorer();
    for i in 0..a.final_archive.len() {
        let v = e.get_solution("r0", i, None).unwrap();
        let w = a.matrix(i).unwrap();
        assert_eq!(v.estimates, separate(&a.mixtures, &w).unwrap());
        assert_eq!(v.objectives, a.final_archive[i].objectives);
        assert_eq!(v.index, Some(i));
        assert_eq!(v.estimates.channels(), 2);
        assert_eq!(v.sir.as_ref().map(Vec::len), Some(2));
    }
    let n = a.final_archive.len();
    assert!(matches!(
        e.get_solution("r0", n, None),
        Err(ExplorerError::OutOfRange { index, len }) if index == n && len == n
    ));
    let small = e.get_solution("r0", 0, Some(200)).unwrap();
    assert!(small.estimates.samples() <= 200);
    assert_eq!(small.sample_index.len(), small.estimates.samples());
    let full = e.get_solution("r0", 0, None).unwrap();
    for (k, &t) in small.sample_index.iter().enumerate() {
        assert_eq!(small.estimates.row(0)[k], full.estimates.row(0)[t]);
    }
}

#[test]
fn sir_is_absent_without_sources() {
    let mut a = artifact(4);
    a.sources = None;
    let e = Explorer::from_artifacts(vec![("u".into(), a)]);
    assert!(e.get_solution("u", 0, None).unwrap().sir.is_none());
    assert!(e.get_front("u", 0).unwrap().mse.is_none());
}

#[test]
fn combinations() {
    let (e, a) = explorer();
    let m = a.final_archive.len() - 1;
    let whole = CombinationRequest {
        picks: vec![Pick { target: 0, member: m, row: 0 }, Pick { target: 1, member: m, row: 1 }],
        max_points: None,
    };
    let c = e.post_combination("r0", &whole).unwrap();
    let s = e.get_solution("r0", m, None).unwrap();
    assert_eq!(c.index, None);
    assert_eq!(c.objectives, s.objectives);
    assert_eq!(c.estimates, s.estimates);
    assert_eq!(c.sir, s.sir);
    // pure function of the request
    let again = e.post_combination("r0", &whole).unwrap();
    assert_eq!(serde_json::to_string(&c).unwrap(), serde_json::to_string(&again).unwrap());

    let dup = CombinationRequest {
        picks: vec![Pick { target: 0, member: 0, row: 0 }, Pick { target: 0, member: 1, row: 1 }],
        max_points: None,
    };
    match e.post_combination("r0", &dup) {
        Err(ExplorerError::Invalid(v)) => {
            assert!(v.iter().any(|m| m.contains("duplicate target 0")), "{v:?}");
            assert!(v.iter().any(|m| m.contains("no pick for target 1")), "{v:?}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn supervised_picks_render_the_supervised_composite() {
    let (e, a) = explorer();
    let best = combine_best(&a.matrices().unwrap(), a.sources.as_ref().unwrap(), &a.mixtures).unwrap();
    let v = e
        .post_combination("r0", &CombinationRequest { picks: best.picks.clone(), max_points: None })
        .unwrap();
    assert_eq!(v.w, best.w);
    assert_eq!(v.estimates, separate(&a.mixtures, &best.w).unwrap());
    assert_eq!(v.sir.unwrap(), best.sir);
}
