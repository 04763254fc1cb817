//! Single-matrix factorization of a CSV dataset.

use std::fs;
use std::path::Path;
use std::time::Instant;

use banmf_core::io::{load_bool_csv, save_bool_csv, save_dense_csv};
use banmf_core::{booleanize, exhaustive_bmf, init_state, AuxiliaryUpdate, BoolMatrix, ThresholdChoice};
use serde::Serialize;

use crate::config::Method;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorizeOptions {
    pub method: Method,
    pub rank: usize,
    pub iters: usize,
    pub lambda: f64,
    pub epsilon: f64,
    pub npoint: usize,
    pub seed: u64,
    pub header: bool,
    pub oracle_budget: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub rows: usize,
    pub cols: usize,
    pub hamming: usize,
    pub relative_error: f64,
    pub delta_w: Option<f64>,
    pub delta_h: Option<f64>,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    pub config: FactorizeOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub wall_time_ms: u64,
    pub wall_time_us: u64,
    pub booleanize_us: u64,
}

#[derive(Debug, Clone)]
pub struct Factorization {
    pub choice: ThresholdChoice,
    pub y: Option<banmf_core::DenseMatrix>,
    pub metrics: Metrics,
    pub timing: Timing,
}

pub fn factorize(x: &BoolMatrix, opts: &FactorizeOptions) -> Result<Factorization> {
    let (n, m) = x.shape();
    let (choice, y, trace, t_loop, t_bool) = if opts.method == Method::Oracle {
        let t0 = Instant::now();
        let sol = exhaustive_bmf(x, opts.rank, opts.oracle_budget)?;
        let us = t0.elapsed().as_micros() as u64;
        let choice = ThresholdChoice {
            delta_w: f64::NAN,
            delta_h: f64::NAN,
            hamming: sol.min_hamming,
            w_hat: sol.w,
            h_hat: sol.h,
        };
        (choice, None, Vec::new(), us, 0)
    } else {
        let cfg = opts
            .method
            .solver_config(opts.rank, opts.iters, opts.lambda, opts.epsilon, opts.seed);
        let project = matches!(opts.method, Method::Banmf | Method::BanmfReg);
        let aux = if project { AuxiliaryUpdate::Project } else { AuxiliaryUpdate::Freeze };
        let mut state = init_state(x, &cfg)?;
        let t0 = Instant::now();
        state.run(x, &cfg, aux);
        let t_loop = t0.elapsed().as_micros() as u64;
        let t1 = Instant::now();
        let choice = booleanize(x, state.w(), state.h(), opts.npoint)?;
        let t_bool = t1.elapsed().as_micros() as u64;
        let trace = state.objective_trace().to_vec();
        let y = project.then(|| state.y().clone());
        (choice, y, trace, t_loop, t_bool)
    };
    let oracle = opts.method == Method::Oracle;
    let metrics = Metrics {
        rows: n,
        cols: m,
        hamming: choice.hamming,
        relative_error: choice.hamming as f64 / (n * m) as f64,
        delta_w: (!oracle).then_some(choice.delta_w),
        delta_h: (!oracle).then_some(choice.delta_h),
        iterations: trace.len(),
        objective_trace: trace,
        config: opts.clone(),
    };
    let timing = Timing {
        wall_time_ms: t_loop / 1000,
        wall_time_us: t_loop,
        booleanize_us: t_bool,
    };
    Ok(Factorization { choice, y, metrics, timing })
}

/// Reads `input`, factorizes it and writes `W.csv`, `H.csv`, `Y.csv`
/// (projected methods only), `metrics.json` and `timing.json` into `out`.
/// Everything but `timing.json` is reproducible byte for byte.
pub fn factorize_file(input: &Path, opts: &FactorizeOptions, out: &Path) -> Result<Factorization> {
    let x = load_bool_csv(input, opts.header)?;
    let f = factorize(&x, opts)?;
    fs::create_dir_all(out)?;
    save_bool_csv(out.join("W.csv"), &f.choice.w_hat)?;
    save_bool_csv(out.join("H.csv"), &f.choice.h_hat)?;
    if let Some(y) = &f.y {
        save_dense_csv(out.join("Y.csv"), y)?;
    }
    fs::write(out.join("metrics.json"), serde_json::to_string_pretty(&f.metrics)? + "\n")?;
    fs::write(out.join("timing.json"), serde_json::to_string_pretty(&f.timing)? + "\n")?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(method: Method) -> FactorizeOptions {
        FactorizeOptions {
            method,
            rank: 2,
            iters: 50,
            lambda: 0.1,
            epsilon: 1e-12,
            npoint: 20,
            seed: 3,
            header: false,
            oracle_budget: 1 << 24,
        }
    }

    #[test]
    fn shapes_and_metrics() {
        let x = BoolMatrix::from_rows(&[[1u8, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 1]]).unwrap();
        for method in Method::ALL {
            let f = factorize(&x, &opts(method)).unwrap();
            assert_eq!(f.choice.w_hat.shape(), (3, 2));
            assert_eq!(f.choice.h_hat.shape(), (2, 4));
            assert_eq!(f.metrics.relative_error, f.metrics.hamming as f64 / 12.0);
            assert_eq!(f.y.is_some(), matches!(method, Method::Banmf | Method::BanmfReg));
            if method == Method::Oracle {
                assert_eq!(f.metrics.hamming, 0);
                assert!(f.metrics.objective_trace.is_empty());
            } else {
                assert_eq!(f.metrics.iterations, 50);
            }
        }
    }
}
