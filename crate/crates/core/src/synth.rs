//! Seeded generators for planted Boolean factorizations.
//!
//! All randomness comes from ChaCha8 streams seeded with 64-bit integers.
//! For a generation seed `s`, the true `W` uses stream `s`, the true `H`
//! stream `s + 1`, and the flip-noise mask stream `s + 2`.

use std::ops::RangeInclusive;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BmfError, Result};
use crate::matrix::{bool_mat_mul, BoolMatrix};
use crate::rank::exact_rank;
use crate::seed::derive_seed;

pub const DEFAULT_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    /// Target fraction of ones in the clean matrix.
    pub density: f64,
    /// Per-entry flip probability.
    pub noise: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(rows: usize, cols: usize, rank: usize, density: f64) -> Self {
        SynthSpec {
            rows,
            cols,
            rank,
            density,
            noise: 0.0,
            seed: 0,
        }
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(BmfError::InvalidParameter(format!(
                "matrix size must be positive, got {}x{}",
                self.rows, self.cols
            )));
        }
        if self.rank == 0 || self.rank > self.rows.min(self.cols) {
            return Err(BmfError::InvalidParameter(format!(
                "rank {} must lie in 1..={}",
                self.rank,
                self.rows.min(self.cols)
            )));
        }
        if !(self.density > 0.0 && self.density < 1.0) {
            return Err(BmfError::InvalidParameter(format!(
                "density must lie in (0, 1), got {}",
                self.density
            )));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(BmfError::InvalidParameter(format!(
                "noise must lie in [0, 1), got {}",
                self.noise
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedInstance {
    pub spec: SynthSpec,
    /// Observed matrix (after noise).
    pub x: BoolMatrix,
    pub w_true: BoolMatrix,
    pub h_true: BoolMatrix,
    /// `w_true ⊗ h_true` before noise.
    pub x_clean: BoolMatrix,
    /// `rank(x_clean) − k`, filled in by the rank-gap suite.
    pub rank_lower_bound_gap: Option<usize>,
}

/// Probability `p` for the factor entries such that the Boolean product of
/// `k` Bernoulli(p) pairs is 1 with probability `d`: `√(1 − (1 − d)^{1/k})`.
pub fn factor_density(d: f64, k: usize) -> Result<f64> {
    if !(d > 0.0 && d < 1.0) {
        return Err(BmfError::InvalidParameter(format!(
            "density must lie in (0, 1), got {d}"
        )));
    }
    if k == 0 {
        return Err(BmfError::InvalidParameter("rank must be at least 1".into()));
    }
    Ok((1.0 - (1.0 - d).powf(1.0 / k as f64)).sqrt())
}

fn bernoulli_matrix(rows: usize, cols: usize, p: f64, seed: u64) -> BoolMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BoolMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() < p)
}

/// Flips every entry independently with probability `p_e`, scanning in
/// row-major order.
pub fn apply_flip_noise(x: &BoolMatrix, p_e: f64, seed: u64) -> BoolMatrix {
    if p_e <= 0.0 {
        return x.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BoolMatrix::from_fn(x.rows(), x.cols(), |i, j| {
        let flip = rng.random::<f64>() < p_e;
        x.get(i, j) ^ flip
    })
}

/// Draws Bernoulli factors at the density that targets `spec.density`,
/// forms their Boolean product and applies flip noise. An all-zero clean
/// matrix is redrawn, up to [`DEFAULT_RETRIES`] attempts; attempt `a > 0`
/// uses the seed `derive_seed(spec.seed, [a])`.
///
/// Zero rows and columns are kept: at moderate rank they occur in most
/// draws, and rejecting them would skew the density away from the target.
pub fn generate_planted(spec: &SynthSpec) -> Result<PlantedInstance> {
    spec.validate()?;
    let p = factor_density(spec.density, spec.rank)?;
    for attempt in 0..DEFAULT_RETRIES {
        let s = if attempt == 0 {
            spec.seed
        } else {
            derive_seed(spec.seed, &[attempt as u64])
        };
        let w_true = bernoulli_matrix(spec.rows, spec.rank, p, s);
        let h_true = bernoulli_matrix(spec.rank, spec.cols, p, s.wrapping_add(1));
        let x_clean = bool_mat_mul(&w_true, &h_true)?;
        if x_clean.is_zero() {
            continue;
        }
        let x = apply_flip_noise(&x_clean, spec.noise, s.wrapping_add(2));
        return Ok(PlantedInstance {
            spec: spec.clone(),
            x,
            w_true,
            h_true,
            x_clean,
            rank_lower_bound_gap: None,
        });
    }
    Err(BmfError::RetriesExhausted {
        attempts: DEFAULT_RETRIES,
        context: format!("{spec:?} kept producing an all-zero matrix"),
    })
}

/// Grid of noiseless instances whose real rank is at least the planted
/// Boolean rank, so that `rank(X) − k` lower-bounds the gap between the
/// nonnegative and Boolean ranks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankGapSuite {
    pub rows: RangeInclusive<usize>,
    pub cols: RangeInclusive<usize>,
    pub ranks: RangeInclusive<usize>,
    pub densities: Vec<f64>,
    pub per_cell: usize,
    pub seed: u64,
    pub retries: usize,
}

impl RankGapSuite {
    /// Cells in iteration order: rows, then cols, then rank, then density.
    pub fn cells(&self) -> Vec<SynthSpec> {
        let mut out = Vec::new();
        for n in self.rows.clone() {
            for m in self.cols.clone() {
                for k in self.ranks.clone() {
                    for &d in &self.densities {
                        out.push(SynthSpec::new(n, m, k, d));
                    }
                }
            }
        }
        out
    }
}

/// One suite entry tagged with its cell index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteInstance {
    pub cell: usize,
    pub index: usize,
    pub instance: PlantedInstance,
}

pub fn generate_rank_gap_suite(suite: &RankGapSuite) -> Result<Vec<SuiteInstance>> {
    if suite.rows.is_empty() || suite.cols.is_empty() || suite.ranks.is_empty() {
        return Err(BmfError::InvalidParameter("suite ranges must be nonempty".into()));
    }
    if suite.densities.is_empty() || suite.per_cell == 0 {
        return Err(BmfError::InvalidParameter(
            "suite needs at least one density and one instance per cell".into(),
        ));
    }
    let mut out = Vec::new();
    'cells: for (cell, base) in suite.cells().into_iter().enumerate() {
        if base.rank > base.rows.min(base.cols) {
            continue;
        }
        let cell_seed = derive_seed(suite.seed, &[cell as u64]);
        let mut accepted = Vec::with_capacity(suite.per_cell);
        for index in 0..suite.per_cell {
            let mut found = None;
            for attempt in 0..suite.retries {
                let spec = base
                    .clone()
                    .with_seed(derive_seed(cell_seed, &[index as u64, attempt as u64]));
                let mut inst = match generate_planted(&spec) {
                    Ok(inst) => inst,
                    Err(BmfError::RetriesExhausted { .. }) => continue,
                    Err(e) => return Err(e),
                };
                let rank = exact_rank(&inst.x_clean);
                if rank >= spec.rank {
                    inst.rank_lower_bound_gap = Some(rank - spec.rank);
                    found = Some(inst);
                    break;
                }
            }
            match found {
                Some(instance) => accepted.push(SuiteInstance {
                    cell,
                    index,
                    instance,
                }),
                None => {
                    warn!(
                        "skipping cell {cell} ({}x{}, k={}, d={}): no instance with rank >= k after {} attempts",
                        base.rows, base.cols, base.rank, base.density, suite.retries
                    );
                    continue 'cells;
                }
            }
        }
        out.extend(accepted);
    }
    Ok(out)
}
