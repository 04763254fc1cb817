//! Experiment configuration: per-experiment defaults, a flat `key = value`
//! file format, and validation.

use std::fmt;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use banmf_core::solver::{DEFAULT_EPSILON, DEFAULT_MAX_ITERS, DEFAULT_REG_LAMBDA};
use banmf_core::synth::DEFAULT_RETRIES;
use banmf_core::{SolverConfig, DEFAULT_NPOINT};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Banmf,
    BanmfReg,
    Nmf,
    NmfReg,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Banmf,
        Method::BanmfReg,
        Method::Nmf,
        Method::NmfReg,
        Method::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Banmf => "banmf",
            Method::BanmfReg => "banmf-reg",
            Method::Nmf => "nmf",
            Method::NmfReg => "nmf-reg",
            Method::Oracle => "oracle",
        }
    }

    pub fn is_regularized(self) -> bool {
        matches!(self, Method::BanmfReg | Method::NmfReg)
    }

    /// Solver settings for this method; `lambda` only applies to the
    /// regularized variants.
    pub fn solver_config(self, rank: usize, iters: usize, lambda: f64, epsilon: f64, seed: u64) -> SolverConfig {
        SolverConfig {
            rank,
            max_iters: iters,
            lambda: if self.is_regularized() { lambda } else { 0.0 },
            epsilon,
            seed,
            early_stop_tol: None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| {
                HarnessError::Config(format!(
                    "unknown method {s:?}; expected one of banmf, banmf-reg, nmf, nmf-reg, oracle"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Density,
    Noise,
    #[serde(rename = "rankgap")]
    RankGap,
    Time,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Density => "density",
            Experiment::Noise => "noise",
            Experiment::RankGap => "rankgap",
            Experiment::Time => "time",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "density" => Ok(Experiment::Density),
            "noise" => Ok(Experiment::Noise),
            "rankgap" => Ok(Experiment::RankGap),
            "time" => Ok(Experiment::Time),
            other => Err(HarnessError::Config(format!("unknown experiment {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Trials per cell; instances per cell for the rank-gap suite.
    pub trials: usize,
    /// Square matrix sizes (density, noise and timing studies).
    pub sizes: Vec<usize>,
    /// Ranks (density, noise and timing studies).
    pub ranks: Vec<usize>,
    pub densities: Vec<f64>,
    pub noises: Vec<f64>,
    /// Rank-gap suite ranges.
    pub gap_rows: RangeInclusive<usize>,
    pub gap_cols: RangeInclusive<usize>,
    pub gap_ranks: RangeInclusive<usize>,
    pub retries: usize,
    pub methods: Vec<Method>,
    pub iters: usize,
    pub lambda: f64,
    pub epsilon: f64,
    pub npoint: usize,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    pub oracle_budget: u64,
    /// Record per-iteration objective traces.
    pub trace: bool,
    /// Also record the Boolean error every this many iterations.
    pub trace_every: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Desk-scale defaults.
    pub fn desk(experiment: Experiment) -> Self {
        let base = ExperimentConfig {
            experiment,
            trials: 20,
            sizes: vec![30],
            ranks: vec![5],
            densities: vec![0.2, 0.5, 0.8],
            noises: vec![0.0],
            gap_rows: 10..=20,
            gap_cols: 10..=20,
            gap_ranks: 2..=4,
            retries: DEFAULT_RETRIES,
            methods: vec![Method::Banmf, Method::BanmfReg, Method::Nmf, Method::NmfReg],
            iters: DEFAULT_MAX_ITERS,
            lambda: DEFAULT_REG_LAMBDA,
            epsilon: DEFAULT_EPSILON,
            npoint: DEFAULT_NPOINT,
            seed: 0,
            jobs: 0,
            oracle_budget: banmf_core::oracle::DEFAULT_BUDGET,
            trace: false,
            trace_every: None,
            out: None,
        };
        match experiment {
            Experiment::Density => base,
            Experiment::Noise => ExperimentConfig {
                densities: vec![0.5],
                noises: vec![0.0, 0.01, 0.05],
                ..base
            },
            Experiment::RankGap => ExperimentConfig {
                trials: 3,
                densities: vec![0.25, 0.5, 0.75],
                ..base
            },
            Experiment::Time => ExperimentConfig {
                trials: 5,
                sizes: vec![50, 100, 200, 350, 500],
                ranks: vec![10],
                densities: vec![0.5],
                methods: vec![Method::Banmf, Method::Nmf],
                ..base
            },
        }
    }

    /// Full-size grids; the desk defaults are scaled down from these.
    pub fn full(experiment: Experiment) -> Self {
        let desk = Self::desk(experiment);
        match experiment {
            Experiment::Density | Experiment::Noise => ExperimentConfig {
                trials: 100,
                sizes: vec![50],
                ..desk
            },
            Experiment::RankGap => ExperimentConfig {
                trials: 5,
                gap_rows: 10..=50,
                gap_cols: 10..=50,
                gap_ranks: 2..=6,
                ..desk
            },
            Experiment::Time => desk,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(HarnessError::Config(msg.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.methods.is_empty() {
            return bad("at least one method is required");
        }
        if self.iters == 0 {
            return bad("iters must be at least 1");
        }
        if self.npoint < 2 {
            return bad("npoint must be at least 2");
        }
        if self.lambda.is_nan() || self.lambda < 0.0 {
            return bad("lambda must be nonnegative");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("epsilon must be positive");
        }
        if self.trace_every == Some(0) {
            return bad("trace_every must be at least 1");
        }
        match self.experiment {
            Experiment::RankGap => {
                if self.gap_rows.is_empty() || self.gap_cols.is_empty() || self.gap_ranks.is_empty() {
                    return bad("rank-gap ranges must be nonempty");
                }
                if self.densities.is_empty() {
                    return bad("densities must be nonempty");
                }
            }
            _ => {
                if self.sizes.is_empty() || self.ranks.is_empty() || self.densities.is_empty() || self.noises.is_empty() {
                    return bad("sizes, ranks, densities and noises must be nonempty");
                }
                if self.sizes.contains(&0) || self.ranks.contains(&0) {
                    return bad("sizes and ranks must be positive");
                }
            }
        }
        if self.densities.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
            return bad("densities must lie in (0, 1)");
        }
        if self.noises.iter().any(|&p| !(0.0..1.0).contains(&p)) {
            return bad("noise levels must lie in [0, 1)");
        }
        Ok(())
    }

    /// Applies every `key = value` line of a config file. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_text(&text)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| HarnessError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "trials" | "per_cell" => self.trials = parse_one(key, value)?,
            "sizes" | "size" => self.sizes = parse_list(key, value)?,
            "ranks" | "rank" => self.ranks = parse_list(key, value)?,
            "densities" | "density" => self.densities = parse_list(key, value)?,
            "noises" | "noise" => self.noises = parse_list(key, value)?,
            "rows" => self.gap_rows = parse_range(key, value)?,
            "cols" => self.gap_cols = parse_range(key, value)?,
            "gap_ranks" => self.gap_ranks = parse_range(key, value)?,
            "retries" => self.retries = parse_one(key, value)?,
            "methods" | "method" => {
                self.methods = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "iters" => self.iters = parse_one(key, value)?,
            "lambda" => self.lambda = parse_one(key, value)?,
            "epsilon" => self.epsilon = parse_one(key, value)?,
            "npoint" => self.npoint = parse_one(key, value)?,
            "seed" => self.seed = parse_one(key, value)?,
            "jobs" => self.jobs = parse_one(key, value)?,
            "oracle_budget" => self.oracle_budget = parse_one(key, value)?,
            "trace" => self.trace = parse_one(key, value)?,
            "trace_every" => self.trace_every = Some(parse_one(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(HarnessError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("invalid value {value:?} for {key}")))
}

/// Comma-separated values; integer items may also be inclusive ranges `a..b`.
pub fn parse_list<T: FromStr + RangeItem>(key: &str, value: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item.contains("..") {
            out.extend(T::expand(parse_range(key, item)?));
        } else {
            out.push(parse_one(key, item)?);
        }
    }
    Ok(out)
}

/// `a..b` or `a..=b` (both inclusive), or a single value `a`.
pub fn parse_range(key: &str, value: &str) -> Result<RangeInclusive<usize>> {
    let value = value.trim();
    match value.split_once("..") {
        Some((lo, hi)) => {
            let hi = hi.strip_prefix('=').unwrap_or(hi);
            let lo: usize = parse_one(key, lo)?;
            let hi: usize = parse_one(key, hi)?;
            if lo > hi {
                return Err(HarnessError::Config(format!("empty range {value:?} for {key}")));
            }
            Ok(lo..=hi)
        }
        None => {
            let v = parse_one(key, value)?;
            Ok(v..=v)
        }
    }
}

pub trait RangeItem: Sized {
    fn expand(r: RangeInclusive<usize>) -> Vec<Self>;
}

impl RangeItem for usize {
    fn expand(r: RangeInclusive<usize>) -> Vec<Self> {
        r.collect()
    }
}

impl RangeItem for f64 {
    fn expand(r: RangeInclusive<usize>) -> Vec<Self> {
        r.map(|v| v as f64).collect()
    }
}
