//! Dense real and Boolean matrices with the products and error metrics used
//! throughout the crate.
//!
//! Both types are row-major. `BoolMatrix` stores one byte per entry, each
//! either 0 or 1.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{BmfError, Result};

/// Row-major real matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(rows, cols, data.len())?;
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(BmfError::InvalidParameter(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&v| v >= 0.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// `self · other`.
    pub fn mul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        mat_mul(self, other)
    }

    /// `self · otherᵀ`, computed without materializing the transpose.
    pub fn mul_transpose(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.cols {
            return Err(BmfError::shape(
                "mul_transpose",
                self.shape(),
                (other.cols, other.rows),
            ));
        }
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..other.rows {
                out.data[i * other.rows + j] = dot(a, other.row(j));
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other`, computed without materializing the transpose.
    pub fn transpose_mul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(BmfError::shape(
                "transpose_mul",
                (self.cols, self.rows),
                other.shape(),
            ));
        }
        let mut out = Self::zeros(self.cols, other.cols);
        for l in 0..self.rows {
            let a = self.row(l);
            let b = other.row(l);
            for (i, &ai) in a.iter().enumerate() {
                if ai == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &bj) in dst.iter_mut().zip(b) {
                    *d += ai * bj;
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Row-major binary matrix, one byte per entry.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoolMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl BoolMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BoolMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        BoolMatrix {
            rows,
            cols,
            data: vec![1; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(rows, cols, data.len())?;
        if let Some(pos) = data.iter().position(|&v| v > 1) {
            return Err(BmfError::InvalidParameter(format!(
                "entry ({}, {}) is {}, expected 0 or 1",
                pos / cols,
                pos % cols,
                data[pos]
            )));
        }
        Ok(BoolMatrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(BmfError::InvalidParameter(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    /// Builds a matrix entry by entry from a predicate.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j) as u8);
            }
        }
        BoolMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.cols + j] != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.data[i * self.cols + j] = v as u8;
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Fraction of entries equal to 1.
    pub fn density(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.count_ones() as f64 / self.data.len() as f64
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn has_zero_row(&self) -> bool {
        (0..self.rows).any(|i| self.row(i).iter().all(|&v| v == 0))
    }

    pub fn has_zero_col(&self) -> bool {
        (0..self.cols).any(|j| (0..self.rows).all(|i| !self.get(i, j)))
    }

    pub fn complement(&self) -> Self {
        BoolMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| 1 - v).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        BoolMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// 0/1 real copy of the matrix.
    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v as f64).collect(),
        }
    }
}

impl fmt::Debug for BoolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BoolMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let line: String = self.row(i).iter().map(|&v| if v != 0 { '1' } else { '0' }).collect();
            writeln!(f, "  {line}")?;
        }
        write!(f, "]")
    }
}

fn check_dims(rows: usize, cols: usize, len: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(BmfError::InvalidParameter(format!(
            "matrix dimensions must be positive, got {rows}x{cols}"
        )));
    }
    if rows * cols != len {
        return Err(BmfError::InvalidParameter(format!(
            "{rows}x{cols} matrix needs {} entries, got {len}",
            rows * cols
        )));
    }
    Ok(())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Standard real product `a · b`.
pub fn mat_mul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(BmfError::shape("mat_mul", a.shape(), b.shape()));
    }
    let mut out = DenseMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let dst = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (l, &ail) in a.row(i).iter().enumerate() {
            if ail == 0.0 {
                continue;
            }
            for (d, &blj) in dst.iter_mut().zip(b.row(l)) {
                *d += ail * blj;
            }
        }
    }
    Ok(out)
}

/// Boolean product: entry `(i, j)` is 1 iff some `l` has `w[i,l] = h[l,j] = 1`.
pub fn bool_mat_mul(w: &BoolMatrix, h: &BoolMatrix) -> Result<BoolMatrix> {
    if w.cols != h.rows {
        return Err(BmfError::shape("bool_mat_mul", w.shape(), h.shape()));
    }
    let mut out = BoolMatrix::zeros(w.rows, h.cols);
    for i in 0..w.rows {
        let dst = &mut out.data[i * h.cols..(i + 1) * h.cols];
        for (l, &wil) in w.row(i).iter().enumerate() {
            if wil == 0 {
                continue;
            }
            for (d, &hlj) in dst.iter_mut().zip(h.row(l)) {
                *d |= hlj;
            }
        }
    }
    Ok(out)
}

/// `‖a − b‖_F`.
pub fn frobenius_error(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(BmfError::shape("frobenius_error", a.shape(), b.shape()));
    }
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Number of positions where `x` and `xhat` differ.
pub fn hamming_error(x: &BoolMatrix, xhat: &BoolMatrix) -> Result<usize> {
    if x.shape() != xhat.shape() {
        return Err(BmfError::shape("hamming_error", x.shape(), xhat.shape()));
    }
    Ok(x.data.iter().zip(&xhat.data).filter(|(a, b)| a != b).count())
}

/// Hamming error normalized by the total entry count `rows · cols`.
pub fn boolean_relative_error(x: &BoolMatrix, xhat: &BoolMatrix) -> Result<f64> {
    let h = hamming_error(x, xhat)?;
    if x.is_empty() {
        return Err(BmfError::InvalidParameter("empty matrix".into()));
    }
    Ok(h as f64 / x.len() as f64)
}
