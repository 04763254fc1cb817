//! Plain CSV matrix format: one matrix row per line, comma separated, no
//! header unless requested. Row and column numbers in errors are 1-based and
//! count data rows only.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{BmfError, Result};
use crate::matrix::{BoolMatrix, DenseMatrix};

const MISSING_TOKENS: &[&str] = &["", "?", "NA", "na", "NaN", "nan"];

fn read_cells<R: Read, T>(
    reader: R,
    header: bool,
    mut parse: impl FnMut(&str, usize, usize) -> Result<T>,
) -> Result<(usize, usize, Vec<T>)> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    let lines = BufReader::new(reader).lines().skip(header as usize);
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        rows += 1;
        let mut n = 0;
        for (c, token) in line.split(',').enumerate() {
            let token = token.trim();
            if MISSING_TOKENS.contains(&token) {
                return Err(BmfError::MissingValue {
                    row: rows,
                    col: c + 1,
                    token: token.to_string(),
                });
            }
            data.push(parse(token, rows, c + 1)?);
            n += 1;
        }
        match cols {
            None => cols = Some(n),
            Some(expected) if expected != n => {
                return Err(BmfError::Parse {
                    row: rows,
                    col: n.min(expected) + 1,
                    message: format!("row has {n} fields, expected {expected}"),
                })
            }
            _ => {}
        }
    }
    match cols {
        Some(c) => Ok((rows, c, data)),
        None => Err(BmfError::Parse {
            row: 0,
            col: 0,
            message: "no data rows".into(),
        }),
    }
}

pub fn read_bool_csv<R: Read>(reader: R, header: bool) -> Result<BoolMatrix> {
    let (rows, cols, data) = read_cells(reader, header, |tok, row, col| match tok {
        "0" => Ok(0u8),
        "1" => Ok(1u8),
        other => Err(BmfError::Parse {
            row,
            col,
            message: format!("expected 0 or 1, found {other:?}"),
        }),
    })?;
    BoolMatrix::from_vec(rows, cols, data)
}

pub fn read_dense_csv<R: Read>(reader: R, header: bool) -> Result<DenseMatrix> {
    let (rows, cols, data) = read_cells(reader, header, |tok, row, col| {
        tok.parse::<f64>().map_err(|_| BmfError::Parse {
            row,
            col,
            message: format!("expected a real number, found {tok:?}"),
        })
    })?;
    DenseMatrix::from_vec(rows, cols, data)
}

pub fn write_bool_csv<W: Write>(mut w: W, m: &BoolMatrix) -> Result<()> {
    let mut line = String::with_capacity(2 * m.cols());
    for i in 0..m.rows() {
        line.clear();
        for (j, &v) in m.row(i).iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push(if v != 0 { '1' } else { '0' });
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes reals using Rust's shortest round-trip formatting.
pub fn write_dense_csv<W: Write>(mut w: W, m: &DenseMatrix) -> Result<()> {
    for i in 0..m.rows() {
        let line = m
            .row(i)
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_bool_csv(path: impl AsRef<Path>, header: bool) -> Result<BoolMatrix> {
    read_bool_csv(File::open(path)?, header)
}

pub fn load_dense_csv(path: impl AsRef<Path>, header: bool) -> Result<DenseMatrix> {
    read_dense_csv(File::open(path)?, header)
}

pub fn save_bool_csv(path: impl AsRef<Path>, m: &BoolMatrix) -> Result<()> {
    write_bool_csv(BufWriter::new(File::create(path)?), m)
}

pub fn save_dense_csv(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    write_dense_csv(BufWriter::new(File::create(path)?), m)
}
