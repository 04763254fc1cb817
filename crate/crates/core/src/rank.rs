//! Exact rank of 0/1 matrices over the rationals.
//!
//! Fraction-free (Bareiss) elimination keeps every intermediate an integer
//! minor of the input. Elimination runs in `i128` and restarts with
//! arbitrary-precision integers if any step would overflow.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::matrix::BoolMatrix;

pub fn exact_rank(x: &BoolMatrix) -> usize {
    let rows: Vec<Vec<i128>> = (0..x.rows())
        .map(|i| x.row(i).iter().map(|&v| v as i128).collect())
        .collect();
    match bareiss_rank_i128(rows) {
        Some(r) => r,
        None => {
            let rows = (0..x.rows())
                .map(|i| x.row(i).iter().map(|&v| BigInt::from(v)).collect())
                .collect();
            bareiss_rank_big(rows)
        }
    }
}

#[allow(clippy::needless_range_loop)]
fn bareiss_rank_i128(mut a: Vec<Vec<i128>>) -> Option<usize> {
    let n = a.len();
    let m = a.first().map_or(0, Vec::len);
    let mut prev: i128 = 1;
    let mut rank = 0;
    for col in 0..m {
        if rank == n {
            break;
        }
        let Some(p) = (rank..n).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(rank, p);
        let pivot = a[rank][col];
        for r in rank + 1..n {
            let factor = a[r][col];
            for c in col + 1..m {
                let t = a[r][c]
                    .checked_mul(pivot)?
                    .checked_sub(factor.checked_mul(a[rank][c])?)?;
                a[r][c] = t / prev;
            }
            a[r][col] = 0;
        }
        prev = pivot;
        rank += 1;
    }
    Some(rank)
}

#[allow(clippy::needless_range_loop)]
fn bareiss_rank_big(mut a: Vec<Vec<BigInt>>) -> usize {
    let n = a.len();
    let m = a.first().map_or(0, Vec::len);
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..m {
        if rank == n {
            break;
        }
        let Some(p) = (rank..n).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let pivot = a[rank][col].clone();
        for r in rank + 1..n {
            let factor = a[r][col].clone();
            for c in col + 1..m {
                let t = &a[r][c] * &pivot - &factor * &a[rank][c];
                a[r][c] = t / &prev;
            }
            a[r][col] = BigInt::zero();
        }
        prev = pivot;
        rank += 1;
    }
    rank
}
