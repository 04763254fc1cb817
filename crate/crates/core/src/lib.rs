//! Boolean matrix factorization through a nonnegative auxiliary problem.
//!
//! A binary matrix `X` is factorized by running multiplicative updates on
//! `‖Y − WH‖_F`, where the auxiliary `Y` shares the support of `X` and is
//! boxed to `[1, k]` on it. The nonnegative factors are then thresholded by
//! a grid search to give Boolean `Ŵ`, `Ĥ` with `X ≈ Ŵ ⊗ Ĥ`.
//!
//! ```
//! use banmf_core::{banmf_factorize_boolean, BoolMatrix, SolverConfig};
//!
//! let x = BoolMatrix::from_rows(&[[1u8, 1, 0], [1, 1, 0], [0, 1, 1]]).unwrap();
//! let fit = banmf_factorize_boolean(&x, &SolverConfig::new(2).with_seed(1), 20).unwrap();
//! assert_eq!(fit.w_hat.shape(), (3, 2));
//! ```

pub mod baselines;
pub mod booleanize;
pub mod error;
pub mod io;
pub mod matrix;
pub mod oracle;
pub mod rank;
pub mod seed;
pub mod solver;
pub mod synth;

pub use baselines::{banmf_factorize_boolean, nmf_factorize_boolean, nmf_solve};
pub use booleanize::{booleanize, threshold, ThresholdChoice, DEFAULT_NPOINT};
pub use error::{BmfError, Result};
pub use matrix::{
    bool_mat_mul, boolean_relative_error, frobenius_error, hamming_error, mat_mul, BoolMatrix,
    DenseMatrix,
};
pub use oracle::{exhaustive_bmf, OracleSolution};
pub use rank::exact_rank;
pub use solver::{
    init_state, project_y, solve, solve_with, update_h, update_w, AuxiliaryUpdate, SolverConfig,
    SolverState,
};
pub use synth::{
    apply_flip_noise, factor_density, generate_planted, generate_rank_gap_suite, PlantedInstance,
    RankGapSuite, SuiteInstance, SynthSpec,
};
