//! Experiment harness around `banmf-core`: configuration, runners for the
//! density, noise, rank-gap and timing studies, and single-file
//! factorization. The `banmf` binary is a thin layer over this crate.

pub mod config;
pub mod error;
pub mod experiments;
pub mod factorize;
pub mod record;

pub use config::{Experiment, ExperimentConfig, Method};
pub use error::{HarnessError, Result};
pub use experiments::{
    run_density_sweep, run_experiment, run_noise_sweep, run_rank_gap_study, run_timing_study,
};
pub use factorize::{factorize, factorize_file, FactorizeOptions};
pub use record::{summarize, write_outputs, ExperimentOutput, TrialRecord};
