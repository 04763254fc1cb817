//! Exhaustive Boolean factorization for tiny matrices, used as ground truth.
//!
//! For a fixed `W` the Hamming error splits into independent per-column
//! terms, so the optimal `H` is found column by column. This visits every
//! `(W, H)` pair's error implicitly and returns the same optimum and the same
//! tie-break as a full double enumeration.

use serde::{Deserialize, Serialize};

use crate::error::{BmfError, Result};
use crate::matrix::BoolMatrix;

pub const DEFAULT_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub w: BoolMatrix,
    pub h: BoolMatrix,
    pub min_hamming: usize,
}

/// Size of the search space as a power of two: `N·k + k·M`.
pub fn search_space_log2(rows: usize, cols: usize, k: usize) -> usize {
    rows * k + k * cols
}

/// Global minimum of `|X − W ⊗ H|` over all Boolean `W` (N×k) and `H` (k×M).
///
/// Among optimal pairs the one that is smallest in row-major lexicographic
/// order (first `W`, then `H`) is returned. Fails when `2^(N·k + k·M)`
/// exceeds `budget`.
pub fn exhaustive_bmf(x: &BoolMatrix, k: usize, budget: u64) -> Result<OracleSolution> {
    if k == 0 {
        return Err(BmfError::InvalidParameter("rank must be at least 1".into()));
    }
    let (n, m) = x.shape();
    let log2 = search_space_log2(n, m, k);
    if log2 >= 64 || (1u64 << log2) > budget {
        return Err(BmfError::BudgetExceeded {
            log2_size: log2.min(u32::MAX as usize) as u32,
            budget,
        });
    }

    // Column candidates in lexicographic order (H[0][j] most significant),
    // stored as masks with bit l = H[l][j].
    let h_masks: Vec<u64> = (0u64..1 << k)
        .map(|code| {
            (0..k).fold(0u64, |acc, l| acc | (((code >> (k - 1 - l)) & 1) << l))
        })
        .collect();

    let nk = n * k;
    let mut best_err = usize::MAX;
    let mut best_w = 0u64;
    let mut best_cols = vec![0usize; m];
    let mut cols = vec![0usize; m];
    let mut w_rows = vec![0u64; n];

    for w_code in 0u64..1 << nk {
        for (i, wr) in w_rows.iter_mut().enumerate() {
            *wr = (0..k).fold(0u64, |acc, l| {
                let e = i * k + l;
                acc | (((w_code >> (nk - 1 - e)) & 1) << l)
            });
        }
        let mut total = 0;
        let mut pruned = false;
        for (j, col_choice) in cols.iter_mut().enumerate() {
            let mut col_best = usize::MAX;
            for (t, &hm) in h_masks.iter().enumerate() {
                let err = w_rows
                    .iter()
                    .enumerate()
                    .filter(|&(i, &wm)| (wm & hm != 0) != x.get(i, j))
                    .count();
                if err < col_best {
                    col_best = err;
                    *col_choice = t;
                    if err == 0 {
                        break;
                    }
                }
            }
            total += col_best;
            if total >= best_err {
                pruned = true;
                break;
            }
        }
        if !pruned && total < best_err {
            best_err = total;
            best_w = w_code;
            best_cols.copy_from_slice(&cols);
            if best_err == 0 {
                break;
            }
        }
    }

    let w = BoolMatrix::from_fn(n, k, |i, l| (best_w >> (nk - 1 - (i * k + l))) & 1 == 1);
    let h = BoolMatrix::from_fn(k, m, |l, j| (h_masks[best_cols[j]] >> l) & 1 == 1);
    Ok(OracleSolution {
        w,
        h,
        min_hamming: best_err,
    })
}
