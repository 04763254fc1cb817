//! Alternating multiplicative updates for the auxiliary nonnegative problem
//!
//! ```text
//! minimize ‖Y − WH‖_F   s.t.  Y_ij = 0 where X_ij = 0,
//!                             1 ≤ Y_ij ≤ k where X_ij = 1,
//!                             W, H ≥ 0
//! ```
//!
//! Each iteration updates `W`, then `H` (using the new `W`), then projects `Y`
//! onto its feasible box using the fresh product `WH`. With `lambda > 0` the
//! updates carry the `½λ‖C∘C − C‖²` binarizing penalty on both factors.
//!
//! The same loop with the projection disabled and `Y` pinned to `X` is the
//! classical multiplicative-update NMF used by the baselines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BmfError, Result};
use crate::matrix::{frobenius_error, BoolMatrix, DenseMatrix};

pub const DEFAULT_MAX_ITERS: usize = 1000;
pub const DEFAULT_EPSILON: f64 = 1e-12;
pub const DEFAULT_REG_LAMBDA: f64 = 0.1;

/// Number of consecutive small relative changes that trigger early stopping.
pub const EARLY_STOP_PATIENCE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rank: usize,
    pub max_iters: usize,
    /// Weight of the binarizing penalty; 0 gives the unregularized rules.
    pub lambda: f64,
    /// Added to every update denominator.
    pub epsilon: f64,
    pub seed: u64,
    /// Stop once the relative objective change stays below this value for
    /// [`EARLY_STOP_PATIENCE`] iterations. Ignored when `lambda > 0`.
    pub early_stop_tol: Option<f64>,
}

impl SolverConfig {
    pub fn new(rank: usize) -> Self {
        SolverConfig {
            rank,
            max_iters: DEFAULT_MAX_ITERS,
            lambda: 0.0,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            early_stop_tol: None,
        }
    }

    /// Defaults for the regularized variant.
    pub fn regularized(rank: usize) -> Self {
        SolverConfig {
            lambda: DEFAULT_REG_LAMBDA,
            ..Self::new(rank)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(BmfError::InvalidParameter("rank must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(BmfError::InvalidParameter("max_iters must be at least 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(BmfError::InvalidParameter(format!(
                "lambda must be a nonnegative number, got {}",
                self.lambda
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(BmfError::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if let Some(tol) = self.early_stop_tol {
            if tol.is_nan() || tol < 0.0 {
                return Err(BmfError::InvalidParameter(format!(
                    "early_stop_tol must be nonnegative, got {tol}"
                )));
            }
        }
        Ok(())
    }
}

/// How the auxiliary matrix evolves between factor updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuxiliaryUpdate {
    /// Clamp `Y` onto the feasible set after every iteration.
    Project,
    /// Keep `Y = X` throughout (plain NMF on the data).
    Freeze,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    y: DenseMatrix,
    w: DenseMatrix,
    h: DenseMatrix,
    objective_trace: Vec<f64>,
    iterations_run: usize,
}

impl SolverState {
    /// Assembles a state from explicit matrices, checking only that shapes agree.
    pub fn from_parts(y: DenseMatrix, w: DenseMatrix, h: DenseMatrix) -> Result<Self> {
        if w.cols() != h.rows() || y.rows() != w.rows() || y.cols() != h.cols() {
            return Err(BmfError::ShapeMismatch {
                op: "solver state",
                left_rows: w.rows(),
                left_cols: w.cols(),
                right_rows: h.rows(),
                right_cols: h.cols(),
            });
        }
        Ok(SolverState {
            y,
            w,
            h,
            objective_trace: Vec::new(),
            iterations_run: 0,
        })
    }

    pub fn y(&self) -> &DenseMatrix {
        &self.y
    }

    pub fn w(&self) -> &DenseMatrix {
        &self.w
    }

    pub fn h(&self) -> &DenseMatrix {
        &self.h
    }

    pub fn objective_trace(&self) -> &[f64] {
        &self.objective_trace
    }

    pub fn iterations_run(&self) -> usize {
        self.iterations_run
    }

    pub fn rank(&self) -> usize {
        self.w.cols()
    }

    /// Last recorded objective, or the objective of the current matrices if
    /// no iteration has run yet.
    pub fn final_objective(&self) -> f64 {
        self.objective_trace
            .last()
            .copied()
            .unwrap_or_else(|| self.objective())
    }

    pub fn product(&self) -> DenseMatrix {
        self.w.mul(&self.h).expect("state shapes are consistent")
    }

    /// `‖Y − WH‖_F` for the current matrices.
    pub fn objective(&self) -> f64 {
        frobenius_error(&self.y, &self.product()).expect("state shapes are consistent")
    }

    /// True when `Y` respects the support constraints for `x` and both
    /// factors are entrywise nonnegative.
    pub fn is_feasible(&self, x: &BoolMatrix, k: usize) -> bool {
        if self.y.shape() != x.shape() || !self.w.is_nonnegative() || !self.h.is_nonnegative() {
            return false;
        }
        let k = k as f64;
        x.as_slice().iter().zip(self.y.as_slice()).all(|(&xv, &yv)| {
            if xv == 0 {
                yv == 0.0
            } else {
                (1.0..=k).contains(&yv)
            }
        })
    }

    pub fn into_parts(self) -> (DenseMatrix, DenseMatrix, DenseMatrix) {
        (self.y, self.w, self.h)
    }

    /// One full iteration: factor updates, optional projection, then the
    /// objective is appended to the trace. Returns the new objective.
    pub fn step(&mut self, x: &BoolMatrix, cfg: &SolverConfig, aux: AuxiliaryUpdate) -> f64 {
        update_w(self, cfg);
        update_h(self, cfg);
        let wh = self.product();
        if aux == AuxiliaryUpdate::Project {
            project_y_with(&mut self.y, x, &wh, cfg.rank);
        }
        let obj = frobenius_error(&self.y, &wh).expect("state shapes are consistent");
        self.objective_trace.push(obj);
        self.iterations_run += 1;
        obj
    }

    /// Iterates until `cfg.max_iters` total iterations or early stop.
    pub fn run(&mut self, x: &BoolMatrix, cfg: &SolverConfig, aux: AuxiliaryUpdate) {
        let tol = if cfg.lambda == 0.0 { cfg.early_stop_tol } else { None };
        let mut quiet = 0;
        let mut prev = self.objective_trace.last().copied();
        while self.iterations_run < cfg.max_iters {
            let obj = self.step(x, cfg, aux);
            if let (Some(tol), Some(p)) = (tol, prev) {
                let rel = (p - obj).abs() / p.abs().max(f64::MIN_POSITIVE);
                quiet = if rel < tol { quiet + 1 } else { 0 };
                if quiet >= EARLY_STOP_PATIENCE {
                    break;
                }
            }
            prev = Some(obj);
        }
    }
}

/// Random start: `W` then `H` drawn uniformly from (0, 1] out of one ChaCha8
/// stream seeded with `cfg.seed`, and `Y = X`.
pub fn init_state(x: &BoolMatrix, cfg: &SolverConfig) -> Result<SolverState> {
    cfg.validate()?;
    if x.is_empty() || x.is_zero() {
        return Err(BmfError::EmptySupport);
    }
    let (n, m) = x.shape();
    let k = cfg.rank;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| 1.0 - rng.random::<f64>()).collect() };
    let w = DenseMatrix::from_vec(n, k, draw(n * k))?;
    let h = DenseMatrix::from_vec(k, m, draw(k * m))?;
    SolverState::from_parts(x.to_dense(), w, h)
}

/// Multiplicative update of `W` against the current `Y` and `H`.
pub fn update_w(state: &mut SolverState, cfg: &SolverConfig) {
    let numer = state.y.mul_transpose(&state.h).expect("consistent shapes");
    let hht = state.h.mul_transpose(&state.h).expect("consistent shapes");
    let denom = state.w.mul(&hht).expect("consistent shapes");
    multiplicative_step(&mut state.w, &numer, &denom, cfg.lambda, cfg.epsilon);
}

/// Multiplicative update of `H` against the current `Y` and `W`.
pub fn update_h(state: &mut SolverState, cfg: &SolverConfig) {
    let numer = state.w.transpose_mul(&state.y).expect("consistent shapes");
    let wtw = state.w.transpose_mul(&state.w).expect("consistent shapes");
    let denom = wtw.mul(&state.h).expect("consistent shapes");
    multiplicative_step(&mut state.h, &numer, &denom, cfg.lambda, cfg.epsilon);
}

// c ← c · (n + 3λc²) / (d + 2λc³ + λc² + ε); the λ terms vanish for λ = 0.
fn multiplicative_step(
    factor: &mut DenseMatrix,
    numer: &DenseMatrix,
    denom: &DenseMatrix,
    lambda: f64,
    eps: f64,
) {
    let it = factor
        .as_mut_slice()
        .iter_mut()
        .zip(numer.as_slice().iter().zip(denom.as_slice()));
    if lambda == 0.0 {
        for (c, (&n, &d)) in it {
            *c *= n / (d + eps);
        }
    } else {
        for (c, (&n, &d)) in it {
            let c2 = *c * *c;
            let num = n + 3.0 * lambda * c2;
            let den = d + 2.0 * lambda * c2 * *c + lambda * c2 + eps;
            *c *= num / den;
        }
    }
}

/// Clamps `Y` onto `[1, k]` on the support of `x` using the current `WH`;
/// entries off the support are set to 0.
pub fn project_y(state: &mut SolverState, x: &BoolMatrix, k: usize) {
    let wh = state.product();
    project_y_with(&mut state.y, x, &wh, k);
}

fn project_y_with(y: &mut DenseMatrix, x: &BoolMatrix, wh: &DenseMatrix, k: usize) {
    let k = k as f64;
    let it = y
        .as_mut_slice()
        .iter_mut()
        .zip(x.as_slice().iter().zip(wh.as_slice()));
    for (yv, (&xv, &p)) in it {
        *yv = if xv == 0 { 0.0 } else { p.clamp(1.0, k) };
    }
}

/// Runs the projected solver from a random start.
pub fn solve(x: &BoolMatrix, cfg: &SolverConfig) -> Result<SolverState> {
    solve_with(x, cfg, AuxiliaryUpdate::Project)
}

pub fn solve_with(x: &BoolMatrix, cfg: &SolverConfig, aux: AuxiliaryUpdate) -> Result<SolverState> {
    let mut state = init_state(x, cfg)?;
    state.run(x, cfg, aux);
    Ok(state)
}
