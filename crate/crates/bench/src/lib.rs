//! Fixtures shared by the kernel benchmarks.

use banmf_core::{generate_planted, init_state, BoolMatrix, DenseMatrix, SolverConfig, SolverState, SynthSpec};

/// Noiseless planted `n × n` instance at density 0.5.
pub fn planted(n: usize, k: usize) -> BoolMatrix {
    generate_planted(&SynthSpec::new(n, n, k, 0.5).with_seed(n as u64))
        .expect("valid fixture")
        .x
}

/// Freshly initialized solver state for `x`.
pub fn fresh_state(x: &BoolMatrix, k: usize) -> (SolverConfig, SolverState) {
    let cfg = SolverConfig::new(k).with_seed(7);
    let state = init_state(x, &cfg).expect("nonzero fixture");
    (cfg, state)
}

/// Deterministic dense matrix with entries in (0, 1].
pub fn dense(rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|i| ((i * 2654435761) % 1000 + 1) as f64 / 1000.0)
        .collect();
    DenseMatrix::from_vec(rows, cols, data).expect("positive dims")
}
