//! Matrix Market coordinate format, `real general` only.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::SparseMatrixCsc;

const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrixCsc> {
    let file = File::open(path)?;
    parse_matrix_market(BufReader::new(file))
}

pub fn write_matrix_market(path: impl AsRef<Path>, a: &SparseMatrixCsc) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    format_matrix_market(&mut w, a)?;
    w.flush()?;
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<SparseMatrixCsc> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (lineno, header) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(parse_err(1, "empty file")),
    };
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_err(lineno, "missing %%MatrixMarket header"));
    }
    if tokens[1] != "matrix" {
        return Err(Error::UnsupportedFormat(format!("object '{}'", tokens[1])));
    }
    if tokens[2] != "coordinate" {
        return Err(Error::UnsupportedFormat(format!("format '{}'", tokens[2])));
    }
    match tokens[3].as_str() {
        "real" | "integer" => {}
        "complex" | "pattern" => {
            return Err(Error::UnsupportedFormat(format!("field '{}'", tokens[3])))
        }
        other => return Err(parse_err(lineno, format!("unknown field '{other}'"))),
    }
    match tokens[4].as_str() {
        "general" => {}
        "symmetric" | "skew-symmetric" | "hermitian" => {
            return Err(Error::UnsupportedFormat(format!("symmetry '{}'", tokens[4])))
        }
        other => return Err(parse_err(lineno, format!("unknown symmetry '{other}'"))),
    }

    let mut size: Option<(usize, usize)> = None;
    let mut triplets = Vec::new();
    let mut last_line = lineno;
    for (lineno, line) in lines {
        let line = line?;
        last_line = lineno;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(lineno, "size line must have 3 fields"));
                }
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| parse_err(lineno, format!("invalid size field '{s}'")))
                };
                let (rows, cols, nnz) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                if rows != cols {
                    return Err(Error::InvalidMatrix(format!(
                        "matrix is {rows}x{cols}, only square matrices are supported"
                    )));
                }
                size = Some((rows, nnz));
                triplets.reserve(nnz);
            }
            Some((n, nnz)) => {
                if fields.len() != 3 {
                    return Err(parse_err(lineno, "entry must have 3 fields"));
                }
                if triplets.len() == nnz {
                    return Err(parse_err(lineno, format!("more than {nnz} entries")));
                }
                let index = |s: &str| -> Result<usize> {
                    let v = s
                        .parse::<usize>()
                        .map_err(|_| parse_err(lineno, format!("invalid index '{s}'")))?;
                    if v == 0 || v > n {
                        return Err(parse_err(lineno, format!("index {v} out of range 1..={n}")));
                    }
                    Ok(v - 1)
                };
                let i = index(fields[0])?;
                let j = index(fields[1])?;
                let v = fields[2]
                    .parse::<f64>()
                    .map_err(|_| parse_err(lineno, format!("invalid value '{}'", fields[2])))?;
                triplets.push((i, j, v));
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| parse_err(last_line, "missing size line"))?;
    if triplets.len() != nnz {
        return Err(parse_err(
            last_line,
            format!("expected {nnz} entries, found {}", triplets.len()),
        ));
    }
    SparseMatrixCsc::from_triplets(n, &triplets)
}

/// Writes entries in column-major order with shortest round-trip formatting.
pub fn format_matrix_market<W: Write>(w: &mut W, a: &SparseMatrixCsc) -> Result<()> {
    writeln!(w, "{HEADER}")?;
    writeln!(w, "{} {} {}", a.n(), a.n(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}
