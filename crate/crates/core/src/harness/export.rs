//! Plot-ready CSV tables. Every table has a header row and numeric cells
//! only, so it can be read back with [`crate::signal::load_table`].

use std::path::Path;

use crate::criteria::{self, CriterionSpec, Feasibility};
use crate::error::{Error, Result};
use crate::evaluation::{self, EvaluationReport, Sir, SweepResult};
use crate::signal::{self, SeparationMatrix, SignalMatrix};
use crate::spea2::Snapshot;

pub fn write_table(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let io = |e: csv::Error| Error::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn objective_headers(specs: &[CriterionSpec]) -> Vec<String> {
    specs.iter().map(|s| s.short_name().to_string()).collect()
}

/// Archive objectives plus the MSE point (`is_mse = 1`).
pub fn front_table(
    specs: &[CriterionSpec],
    objectives: &[Vec<f64>],
    penalized: &[bool],
    mse_point: Option<&[f64]>,
) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut header = vec!["index".to_string()];
    header.extend(objective_headers(specs));
    header.push("penalized".to_string());
    header.push("is_mse".to_string());
    let mut rows: Vec<Vec<f64>> = objectives
        .iter()
        .zip(penalized)
        .enumerate()
        .map(|(i, (o, &p))| {
            let mut r = vec![i as f64];
            r.extend(o);
            r.push(flag(p));
            r.push(0.0);
            r
        })
        .collect();
    if let Some(m) = mse_point {
        let mut r = vec![objectives.len() as f64];
        r.extend(m);
        r.push(0.0);
        r.push(1.0);
        rows.push(r);
    }
    (header, rows)
}

/// Per-source SIR of the members along the criterion ordering.
pub fn ordered_sir_table(specs: &[CriterionSpec], report: &EvaluationReport) -> (Vec<String>, Vec<Vec<f64>>) {
    let n = report.per_solution_sir.first().map_or(0, Vec::len);
    let mut header = vec!["rank".to_string(), "member".to_string()];
    header.extend(objective_headers(specs));
    header.extend((1..=n).map(|i| format!("sir_{i}")));
    header.push("mean".to_string());
    let rows = report
        .ordering
        .iter()
        .enumerate()
        .map(|(rank, &m)| {
            let mut r = vec![rank as f64, m as f64];
            r.extend(&report.objectives[m]);
            r.extend(report.per_solution_sir[m].iter().map(|s| s.csv_value()));
            r.push(report.mean_sir[m].csv_value());
            r
        })
        .collect();
    (header, rows)
}

/// Standardised sources next to the aligned estimates of the best member,
/// the combined solution and the MSE solution.
pub fn estimates_table(report: &EvaluationReport, best: &SeparationMatrix, sources: &SignalMatrix, mixtures: &SignalMatrix) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let n = sources.channels();
    let mut header = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        header.push(format!("source_{}", i + 1));
        cols.push(signal::standardize(sources.row(i))?);
    }
    let best_score = evaluation::score_solution(best, sources, mixtures)?;
    let best_y = signal::separate(mixtures, best)?;
    for i in 0..n {
        header.push(format!("best_{}", i + 1));
        cols.push(evaluation::align(sources.row(i), best_y.row(best_score.permutation[i]))?);
    }
    for (label, w) in [("combined", &report.combined.w), ("mse", &report.mse.w)] {
        let y = signal::separate(mixtures, w)?;
        for i in 0..n {
            header.push(format!("{label}_{}", i + 1));
            cols.push(evaluation::align(sources.row(i), y.row(i))?);
        }
    }
    let t = sources.samples();
    let rows = (0..t).map(|k| cols.iter().map(|c| c[k]).collect()).collect();
    Ok((header, rows))
}

pub fn mse_point(
    w: &SeparationMatrix,
    mixtures: &SignalMatrix,
    specs: &[CriterionSpec],
    feasibility: &Feasibility,
) -> Result<Vec<f64>> {
    Ok(criteria::evaluate_with(w, mixtures, specs, feasibility)?.values)
}

/// Every archive member at every snapshot.
pub fn convergence_table(specs: &[CriterionSpec], snapshots: &[Snapshot]) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut header = vec!["iteration".to_string(), "member".to_string()];
    header.extend(objective_headers(specs));
    header.push("penalized".to_string());
    let mut rows = Vec::new();
    for s in snapshots {
        for (m, (o, &p)) in s.objectives.iter().zip(&s.penalized).enumerate() {
            let mut r = vec![s.iteration as f64, m as f64];
            r.extend(o);
            r.push(flag(p));
            rows.push(r);
        }
    }
    (header, rows)
}

/// Archive size, penalised count and best value per objective at each snapshot.
pub fn convergence_summary(specs: &[CriterionSpec], snapshots: &[Snapshot]) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut header = vec!["iteration".to_string(), "size".to_string(), "penalized".to_string()];
    header.extend(specs.iter().map(|s| format!("best_{}", s.short_name())));
    let rows = snapshots
        .iter()
        .map(|s| {
            let mut r = vec![s.iteration as f64, s.objectives.len() as f64, s.penalized_count() as f64];
            for k in 0..specs.len() {
                r.push(s.objectives.iter().map(|o| o[k]).fold(f64::INFINITY, f64::min));
            }
            r
        })
        .collect();
    (header, rows)
}

/// One row per grid point: `snr` followed by every curve.
pub fn sweep_table(result: &SweepResult) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut header = vec!["snr".to_string()];
    header.extend(result.series.iter().map(|s| s.name.clone()));
    let rows = result
        .snr_grid
        .iter()
        .enumerate()
        .map(|(g, &snr)| {
            let mut r = vec![snr];
            r.extend(result.series.iter().map(|s| s.values[g].csv_value()));
            r
        })
        .collect();
    (header, rows)
}

pub fn sweep_cells_table(result: &SweepResult) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut header: Vec<String> = ["snr", "repetition", "best", "worst", "average"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let monos: Vec<String> = result
        .series
        .iter()
        .filter(|s| s.name.starts_with("mono_"))
        .map(|s| s.name.clone())
        .collect();
    header.extend(monos.iter().cloned());
    header.extend(["mse", "combined", "archive_size", "penalized"].iter().map(|s| s.to_string()));
    let rows = result
        .cells
        .iter()
        .map(|c| {
            let mut r = vec![c.snr, c.repetition as f64, c.best.csv_value(), c.worst.csv_value(), c.average.csv_value()];
            r.extend(c.mono.iter().map(|s: &Sir| s.csv_value()));
            r.push(c.mse.csv_value());
            r.push(c.combined.csv_value());
            r.push(c.archive_size as f64);
            r.push(c.penalized as f64);
            r
        })
        .collect();
    (header, rows)
}
