//! Matrix Market reader/writer for real dense and coordinate matrices.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_header(line_no: usize, line: &str) -> Result<(Layout, Symmetry)> {
    let lower = line.to_ascii_lowercase();
    let tokens: Vec<&str> = lower.split_whitespace().collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(
            line_no,
            "expected `%%MatrixMarket matrix <layout> <field> <symmetry>`",
        ));
    }
    let layout = match tokens[2] {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(Error::Unsupported(format!("layout `{other}`"))),
    };
    match tokens[3] {
        "real" | "double" | "integer" => {}
        other => return Err(Error::Unsupported(format!("field `{other}`"))),
    }
    let symmetry = match tokens[4] {
        "general" => Symmetry::General,
        // hermitian coincides with symmetric for real data
        "symmetric" | "hermitian" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(Error::Unsupported(format!("symmetry `{other}`"))),
    };
    Ok((layout, symmetry))
}

fn parse_usize(line_no: usize, tok: Option<&str>, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(line_no, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line_no, format!("invalid {what} `{tok}`")))
}

fn parse_value(line_no: usize, tok: Option<&str>) -> Result<f64> {
    let tok = tok.ok_or_else(|| parse_err(line_no, "missing value"))?;
    tok.parse()
        .map_err(|_| parse_err(line_no, format!("invalid value `{tok}`")))
}

/// Reads a Matrix Market stream into a dense matrix. Duplicate coordinate
/// entries are summed; symmetric storage is mirrored.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<DMatrix<f64>> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (layout, symmetry) = match lines.next() {
        Some((no, line)) => parse_header(no, &line?)?,
        None => return Err(parse_err(1, "empty file")),
    };

    let mut data = lines.filter_map(|(no, line)| match line {
        Ok(l) if l.trim().is_empty() || l.trim_start().starts_with('%') => None,
        other => Some((no, other)),
    });

    let (size_no, size_line) = data
        .next()
        .ok_or_else(|| parse_err(2, "missing size line"))?;
    let size_line = size_line?;
    let mut toks = size_line.split_whitespace();
    let rows = parse_usize(size_no, toks.next(), "row count")?;
    let cols = parse_usize(size_no, toks.next(), "column count")?;
    let mut mat = DMatrix::zeros(rows, cols);
    if symmetry != Symmetry::General && rows != cols {
        return Err(parse_err(
            size_no,
            "symmetric storage requires a square matrix",
        ));
    }

    let mut put = |no: usize, i: usize, j: usize, v: f64| -> Result<()> {
        if i >= rows || j >= cols {
            return Err(parse_err(
                no,
                format!("index ({}, {}) out of bounds", i + 1, j + 1),
            ));
        }
        mat[(i, j)] += v;
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => mat[(j, i)] += v,
                Symmetry::SkewSymmetric => mat[(j, i)] -= v,
            }
        }
        Ok(())
    };

    match layout {
        Layout::Coordinate => {
            let nnz = parse_usize(size_no, toks.next(), "entry count")?;
            let mut seen = 0;
            for (no, line) in data {
                let line = line?;
                let mut t = line.split_whitespace();
                let i = parse_usize(no, t.next(), "row index")?;
                let j = parse_usize(no, t.next(), "column index")?;
                if i == 0 || j == 0 {
                    return Err(parse_err(no, "indices are 1-based"));
                }
                let v = parse_value(no, t.next())?;
                if seen == nnz {
                    return Err(parse_err(
                        no,
                        format!("more than the declared {nnz} entries"),
                    ));
                }
                put(no, i - 1, j - 1, v)?;
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_err(
                    size_no,
                    format!("declared {nnz} entries, found {seen}"),
                ));
            }
        }
        Layout::Array => {
            // column-major; symmetric storage lists the lower triangle only
            let mut slots = (0..cols).flat_map(|j| {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::SkewSymmetric => j + 1,
                };
                (start..rows).map(move |i| (i, j))
            });
            let mut last_no = size_no;
            for (no, line) in data {
                let line = line?;
                last_no = no;
                for tok in line.split_whitespace() {
                    let v = parse_value(no, Some(tok))?;
                    let (i, j) = slots
                        .next()
                        .ok_or_else(|| parse_err(no, "more values than the matrix holds"))?;
                    put(no, i, j, v)?;
                }
            }
            if slots.next().is_some() {
                return Err(parse_err(last_no, "fewer values than the matrix holds"));
            }
        }
    }
    Ok(mat)
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let file = File::open(path)?;
    read_matrix_market(BufReader::new(file))
}

/// Writes `mat` as `coordinate real general`, listing every entry whose bit
/// pattern is not `+0.0`. Values use the shortest round-trip representation.
pub fn write_matrix_market<W: Write>(mut out: W, mat: &DMatrix<f64>) -> Result<()> {
    let entries: Vec<(usize, usize, f64)> = (0..mat.ncols())
        .flat_map(|j| (0..mat.nrows()).map(move |i| (i, j)))
        .map(|(i, j)| (i, j, mat[(i, j)]))
        .filter(|(_, _, v)| v.to_bits() != 0)
        .collect();
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", mat.nrows(), mat.ncols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}
