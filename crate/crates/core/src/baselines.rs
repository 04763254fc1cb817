//! Multiplicative-update NMF comparators. They share the projected solver's
//! loop with `Y` frozen at `X`, so initialization, denominator guarding and
//! iteration accounting are identical.

use crate::booleanize::{booleanize, ThresholdChoice};
use crate::error::Result;
use crate::matrix::BoolMatrix;
use crate::solver::{solve_with, AuxiliaryUpdate, SolverConfig, SolverState};

/// Plain (`lambda = 0`) or regularized NMF of `x` itself.
pub fn nmf_solve(x: &BoolMatrix, cfg: &SolverConfig) -> Result<SolverState> {
    solve_with(x, cfg, AuxiliaryUpdate::Freeze)
}

pub fn nmf_factorize_boolean(
    x: &BoolMatrix,
    cfg: &SolverConfig,
    npoint: usize,
) -> Result<ThresholdChoice> {
    let state = nmf_solve(x, cfg)?;
    booleanize(x, state.w(), state.h(), npoint)
}

/// Projected solver followed by the threshold search.
pub fn banmf_factorize_boolean(
    x: &BoolMatrix,
    cfg: &SolverConfig,
    npoint: usize,
) -> Result<ThresholdChoice> {
    let state = solve_with(x, cfg, AuxiliaryUpdate::Project)?;
    booleanize(x, state.w(), state.h(), npoint)
}
