//! Threshold search that turns nonnegative factors into Boolean ones.

use serde::{Deserialize, Serialize};

use crate::error::{BmfError, Result};
use crate::matrix::{bool_mat_mul, hamming_error, BoolMatrix, DenseMatrix};

pub const DEFAULT_NPOINT: usize = 20;

/// Best threshold pair found by [`booleanize`] together with the factors it
/// produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub delta_w: f64,
    pub delta_h: f64,
    /// Hamming error of `w_hat ⊗ h_hat` against the target matrix.
    pub hamming: usize,
    pub w_hat: BoolMatrix,
    pub h_hat: BoolMatrix,
}

impl ThresholdChoice {
    pub fn reconstruction(&self) -> BoolMatrix {
        bool_mat_mul(&self.w_hat, &self.h_hat).expect("factor shapes agree")
    }
}

/// Entry is 1 iff `c_ij > delta`.
pub fn threshold(c: &DenseMatrix, delta: f64) -> BoolMatrix {
    BoolMatrix::from_fn(c.rows(), c.cols(), |i, j| c.get(i, j) > delta)
}

/// `npoint` evenly spaced values from `lo` to `hi`, both ends included.
pub fn linspace(lo: f64, hi: f64, npoint: usize) -> Vec<f64> {
    match npoint {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (npoint - 1) as f64;
            let mut v: Vec<f64> = (0..npoint).map(|i| lo + step * i as f64).collect();
            v[npoint - 1] = hi;
            v
        }
    }
}

/// Candidate thresholds for one factor: the inclusive grid over its value
/// range, plus 0, sorted ascending without duplicates.
pub fn threshold_grid(c: &DenseMatrix, npoint: usize) -> Vec<f64> {
    let mut grid = linspace(c.min(), c.max(), npoint);
    grid.push(0.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Grid search over `(δ_W, δ_H)` minimizing the Hamming error of the Boolean
/// reconstruction against `x`. Ties go to the lexicographically smallest pair.
pub fn booleanize(
    x: &BoolMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    npoint: usize,
) -> Result<ThresholdChoice> {
    if npoint < 2 {
        return Err(BmfError::InvalidParameter(format!(
            "npoint must be at least 2, got {npoint}"
        )));
    }
    if w.cols() != h.rows() {
        return Err(BmfError::shape("booleanize", w.shape(), h.shape()));
    }
    if (w.rows(), h.cols()) != x.shape() {
        return Err(BmfError::shape("booleanize", (w.rows(), h.cols()), x.shape()));
    }
    let grid_w = threshold_grid(w, npoint);
    let grid_h = threshold_grid(h, npoint);
    let h_candidates: Vec<BoolMatrix> = grid_h.iter().map(|&d| threshold(h, d)).collect();

    let mut best: Option<(usize, usize, usize)> = None;
    if w.cols() <= 64 {
        let h_masks: Vec<Vec<u64>> = h_candidates.iter().map(column_masks).collect();
        for (a, &dw) in grid_w.iter().enumerate() {
            let w_masks = row_masks(&threshold(w, dw));
            for (b, hm) in h_masks.iter().enumerate() {
                let err = packed_hamming(x, &w_masks, hm);
                if best.is_none_or(|(e, _, _)| err < e) {
                    best = Some((err, a, b));
                }
            }
        }
    } else {
        for (a, &dw) in grid_w.iter().enumerate() {
            let w_hat = threshold(w, dw);
            for (b, h_hat) in h_candidates.iter().enumerate() {
                let err = hamming_error(x, &bool_mat_mul(&w_hat, h_hat)?)?;
                if best.is_none_or(|(e, _, _)| err < e) {
                    best = Some((err, a, b));
                }
            }
        }
    }

    let (hamming, a, b) = best.expect("grids are nonempty");
    Ok(ThresholdChoice {
        delta_w: grid_w[a],
        delta_h: grid_h[b],
        hamming,
        w_hat: threshold(w, grid_w[a]),
        h_hat: h_candidates[b].clone(),
    })
}

fn row_masks(w: &BoolMatrix) -> Vec<u64> {
    (0..w.rows())
        .map(|i| {
            w.row(i)
                .iter()
                .enumerate()
                .fold(0u64, |m, (l, &v)| m | ((v as u64) << l))
        })
        .collect()
}

fn column_masks(h: &BoolMatrix) -> Vec<u64> {
    let mut masks = vec![0u64; h.cols()];
    for l in 0..h.rows() {
        for (j, &v) in h.row(l).iter().enumerate() {
            masks[j] |= (v as u64) << l;
        }
    }
    masks
}

fn packed_hamming(x: &BoolMatrix, w_rows: &[u64], h_cols: &[u64]) -> usize {
    let mut err = 0;
    for (i, &wm) in w_rows.iter().enumerate() {
        for (&xv, &hm) in x.row(i).iter().zip(h_cols) {
            err += ((wm & hm != 0) != (xv != 0)) as usize;
        }
    }
    err
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dm<const C: usize>(rows: &[[f64; C]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    fn bm<const C: usize>(rows: &[[u8; C]]) -> BoolMatrix {
        BoolMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(threshold(&dm(&[[0.5, 0.0], [0.0, 2.0]]), 0.0), bm(&[[1, 0], [0, 1]]));
        let c = dm(&[[0.2, 3.5], [1.0, 0.0]]);
        assert!(threshold(&c, c.max()).is_zero());
        assert_eq!(threshold(&dm(&[[0.3, 0.7]]), 0.5), bm(&[[0, 1]]));
    }

    #[test]
    fn linspace_includes_both_ends() {
        let g = linspace(0.1, 0.7, 4);
        assert_eq!(g.len(), 4);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[3], 0.7);
        assert!((g[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn grid_always_contains_zero() {
        let g = threshold_grid(&dm(&[[2.0, 4.0]]), 3);
        assert_eq!(g, vec![0.0, 2.0, 3.0, 4.0]);
        let g = threshold_grid(&dm(&[[0.0, 1.0]]), 3);
        assert_eq!(g, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn boolean_inputs_are_recovered() {
        let w = bm(&[[1, 0], [1, 1], [0, 1]]);
        let h = bm(&[[1, 1, 0, 0], [0, 1, 1, 0]]);
        let x = bool_mat_mul(&w, &h).unwrap();
        let c = booleanize(&x, &w.to_dense(), &h.to_dense(), DEFAULT_NPOINT).unwrap();
        assert_eq!(c.hamming, 0);
        assert_eq!(c.reconstruction(), x);
    }

    #[test]
    fn scaled_identity() {
        let x = BoolMatrix::identity(2);
        let w = DenseMatrix::identity(2).scale(10.0);
        let c = booleanize(&x, &w, &w, 5).unwrap();
        assert_eq!(c.hamming, 0);
        assert_eq!(c.w_hat, x);
        // smallest zero-error pair
        assert_eq!((c.delta_w, c.delta_h), (0.0, 0.0));
    }

    #[test]
    fn exhaustive_grid_minimum() {
        let x = bm(&[[1, 0, 1], [1, 1, 0], [0, 1, 1]]);
        let w = dm(&[[0.9, 0.1], [0.4, 0.6], [0.05, 0.8]]);
        let h = dm(&[[0.7, 0.3, 0.5], [0.0, 0.9, 0.45]]);
        let c = booleanize(&x, &w, &h, 7).unwrap();
        let mut best = usize::MAX;
        for &dw in &threshold_grid(&w, 7) {
            for &dh in &threshold_grid(&h, 7) {
                let r = bool_mat_mul(&threshold(&w, dw), &threshold(&h, dh)).unwrap();
                best = best.min(hamming_error(&x, &r).unwrap());
            }
        }
        assert_eq!(c.hamming, best);
        assert_eq!(hamming_error(&x, &c.reconstruction()).unwrap(), c.hamming);
    }

    #[test]
    fn wide_rank_uses_generic_path() {
        let k = 70;
        let w = BoolMatrix::from_fn(3, k, |i, l| l == 65 + i);
        let h = BoolMatrix::from_fn(k, 4, |l, j| l == 65 + j % 3);
        let x = bool_mat_mul(&w, &h).unwrap();
        let c = booleanize(&x, &w.to_dense(), &h.to_dense(), 4).unwrap();
        assert_eq!(c.hamming, 0);
    }

    #[test]
    fn rejects_bad_input() {
        let x = BoolMatrix::identity(2);
        let w = DenseMatrix::identity(2);
        assert!(booleanize(&x, &w, &w, 1).is_err());
        assert!(booleanize(&x, &w, &DenseMatrix::identity(3), 5).is_err());
        assert!(booleanize(&BoolMatrix::identity(3), &w, &w, 5).is_err());
    }
}
