//! Trial records and their CSV/JSON emission.
//!
//! Everything except wall-clock measurements is a pure function of the
//! configuration, so measured times are written to separate `timings*.csv`
//! files and the remaining outputs are byte-reproducible.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig, Method};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub experiment: Experiment,
    pub cell: usize,
    pub trial: usize,
    pub method: Method,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub density: f64,
    pub noise: f64,
    pub gap: Option<usize>,
    /// Seed of the generated instance.
    pub seed: u64,
    /// Error against the matrix the method was given.
    pub hamming: usize,
    pub relative_error: f64,
    /// Error against the noiseless planted matrix, when there is one.
    pub clean_hamming: Option<usize>,
    pub clean_relative_error: Option<f64>,
    pub objective_final: Option<f64>,
    pub iterations: usize,
    pub delta_w: Option<f64>,
    pub delta_h: Option<f64>,
    pub wall_time_ms: u64,
    pub wall_time_us: u64,
    pub booleanize_us: u64,
}

/// A trial/method combination that produced no record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub experiment: Experiment,
    pub cell: usize,
    pub trial: usize,
    pub method: Option<Method>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub experiment: Experiment,
    pub cell: usize,
    pub trial: usize,
    pub method: Method,
    pub iteration: usize,
    pub objective: f64,
    pub hamming: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub failures: Vec<Failure>,
    pub traces: Vec<TracePoint>,
}

#[derive(Serialize)]
struct ResultRow<'a> {
    experiment: &'a Experiment,
    cell: usize,
    trial: usize,
    method: &'a Method,
    n: usize,
    m: usize,
    k: usize,
    density: f64,
    noise: f64,
    gap: Option<usize>,
    seed: u64,
    hamming: usize,
    relative_error: f64,
    clean_hamming: Option<usize>,
    clean_relative_error: Option<f64>,
    objective_final: Option<f64>,
    iterations: usize,
    delta_w: Option<f64>,
    delta_h: Option<f64>,
}

#[derive(Serialize)]
struct TimingRow<'a> {
    experiment: &'a Experiment,
    cell: usize,
    trial: usize,
    method: &'a Method,
    n: usize,
    m: usize,
    k: usize,
    iterations: usize,
    wall_time_ms: u64,
    wall_time_us: u64,
    booleanize_us: u64,
}

/// Aggregate over one group of records (a parameter cell, or a rank-gap
/// bucket) for one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub experiment: Experiment,
    pub method: Method,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub density: Option<f64>,
    pub noise: Option<f64>,
    pub gap: Option<usize>,
    pub count: usize,
    pub mean_relative_error: f64,
    pub std_relative_error: f64,
    pub mean_hamming: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingSummaryRow {
    pub method: Method,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub runs: usize,
    pub median_wall_time_us: u64,
    pub median_wall_time_ms: f64,
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mu = mean(values);
    let ss: f64 = values.iter().map(|v| (v - mu) * (v - mu)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

pub fn median(values: &mut [u64]) -> u64 {
    values.sort_unstable();
    let n = values.len();
    if n == 0 {
        0
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2
    }
}

// (n, m, k, density bits, noise bits, gap); unused parts are None.
type GroupKey = (Option<usize>, Option<usize>, Option<usize>, Option<u64>, Option<u64>, Option<usize>);

fn group_key(r: &TrialRecord) -> GroupKey {
    match r.experiment {
        Experiment::RankGap => (None, None, None, None, None, r.gap),
        _ => (
            Some(r.n),
            Some(r.m),
            Some(r.k),
            Some(r.density.to_bits()),
            Some(r.noise.to_bits()),
            None,
        ),
    }
}

/// Per-group mean and standard deviation of the relative error, grouped by
/// parameter cell, or by rank-gap bucket for the rank-gap study.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut order = Vec::new();
    let mut groups: BTreeMap<_, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        let key = (group_key(r), r.method);
        groups.entry(key).or_insert_with(|| {
            order.push(key);
            Vec::new()
        }).push(r);
    }
    if records.first().map(|r| r.experiment) == Some(Experiment::RankGap) {
        order.sort_by_key(|(g, m)| (g.5, *m));
    } else {
        let mut seen: Vec<_> = Vec::new();
        for key in &order {
            if !seen.contains(&key.0) {
                seen.push(key.0);
            }
        }
        order.sort_by_key(|(g, m)| (seen.iter().position(|s| s == g), *m));
    }
    order
        .into_iter()
        .map(|key| {
            let rs = &groups[&key];
            let rel: Vec<f64> = rs.iter().map(|r| r.relative_error).collect();
            let ham: Vec<f64> = rs.iter().map(|r| r.hamming as f64).collect();
            let first = rs[0];
            let (n, m, k, d, p, gap) = key.0;
            SummaryRow {
                experiment: first.experiment,
                method: key.1,
                n,
                m,
                k,
                density: d.map(f64::from_bits),
                noise: p.map(f64::from_bits),
                gap,
                count: rs.len(),
                mean_relative_error: mean(&rel),
                std_relative_error: std_dev(&rel),
                mean_hamming: mean(&ham),
            }
        })
        .collect()
}

/// Median wall time per matrix shape, rank and method.
pub fn summarize_timings(records: &[TrialRecord]) -> Vec<TimingSummaryRow> {
    let mut groups: BTreeMap<(usize, usize, usize, Method), Vec<u64>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.n, r.m, r.k, r.method))
            .or_default()
            .push(r.wall_time_us);
    }
    let mut rows: Vec<_> = groups
        .into_iter()
        .map(|((n, m, k, method), mut times)| {
            let med = median(&mut times);
            TimingSummaryRow {
                method,
                n,
                m,
                k,
                runs: times.len(),
                median_wall_time_us: med,
                median_wall_time_ms: med as f64 / 1000.0,
            }
        })
        .collect();
    rows.sort_by_key(|r| (r.method, r.n * r.m, r.k));
    rows
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_with_header<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    if rows.is_empty() {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(header)?;
        w.flush()?;
        Ok(())
    } else {
        write_rows(path, rows)
    }
}

const RESULT_HEADER: &[&str] = &[
    "experiment", "cell", "trial", "method", "n", "m", "k", "density", "noise", "gap", "seed",
    "hamming", "relative_error", "clean_hamming", "clean_relative_error", "objective_final",
    "iterations", "delta_w", "delta_h",
];

/// Writes the experiment's files into `dir`:
///
/// * `trials.csv`, `summary.csv`, `failures.csv`, `config.json` and (when
///   tracing) `traces.csv`, which are reproducible byte for byte;
/// * `timings.csv` and `timing_summary.csv` with measured wall-clock times.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, out: &ExperimentOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    let rows: Vec<ResultRow> = out
        .records
        .iter()
        .map(|r| ResultRow {
            experiment: &r.experiment,
            cell: r.cell,
            trial: r.trial,
            method: &r.method,
            n: r.n,
            m: r.m,
            k: r.k,
            density: r.density,
            noise: r.noise,
            gap: r.gap,
            seed: r.seed,
            hamming: r.hamming,
            relative_error: r.relative_error,
            clean_hamming: r.clean_hamming,
            clean_relative_error: r.clean_relative_error,
            objective_final: r.objective_final,
            iterations: r.iterations,
            delta_w: r.delta_w,
            delta_h: r.delta_h,
        })
        .collect();
    write_with_header(&dir.join("trials.csv"), RESULT_HEADER, &rows)?;
    write_with_header(
        &dir.join("summary.csv"),
        &[
            "experiment", "method", "n", "m", "k", "density", "noise", "gap", "count",
            "mean_relative_error", "std_relative_error", "mean_hamming",
        ],
        &summarize(&out.records),
    )?;
    write_with_header(
        &dir.join("failures.csv"),
        &["experiment", "cell", "trial", "method", "reason"],
        &out.failures,
    )?;
    if cfg.trace || cfg.trace_every.is_some() {
        write_with_header(
            &dir.join("traces.csv"),
            &["experiment", "cell", "trial", "method", "iteration", "objective", "hamming"],
            &out.traces,
        )?;
    }
    let mut echo = cfg.clone();
    echo.out = None;
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(&echo)? + "\n")?;

    let timing_rows: Vec<TimingRow> = out
        .records
        .iter()
        .map(|r| TimingRow {
            experiment: &r.experiment,
            cell: r.cell,
            trial: r.trial,
            method: &r.method,
            n: r.n,
            m: r.m,
            k: r.k,
            iterations: r.iterations,
            wall_time_ms: r.wall_time_ms,
            wall_time_us: r.wall_time_us,
            booleanize_us: r.booleanize_us,
        })
        .collect();
    write_with_header(
        &dir.join("timings.csv"),
        &[
            "experiment", "cell", "trial", "method", "n", "m", "k", "iterations", "wall_time_ms",
            "wall_time_us", "booleanize_us",
        ],
        &timing_rows,
    )?;
    write_with_header(
        &dir.join("timing_summary.csv"),
        &["method", "n", "m", "k", "runs", "median_wall_time_us", "median_wall_time_ms"],
        &summarize_timings(&out.records),
    )?;
    Ok(())
}
