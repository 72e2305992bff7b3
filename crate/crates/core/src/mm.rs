//! Matrix Market coordinate files (real, general or symmetric on read; general on
//! write) and plain one-value-per-line vector files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn mm_err(msg: impl Into<String>) -> Error {
    Error::MatrixMarket(msg.into())
}

pub fn read_matrix_market<R: Read>(reader: R) -> Result<SparseMatrix> {
    let mut lines = BufReader::new(reader).lines();

    let header = lines
        .next()
        .ok_or_else(|| mm_err("empty input"))??
        .to_ascii_lowercase();
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(mm_err(format!("bad header line: {header}")));
    }
    if tokens[2] != "coordinate" {
        return Err(mm_err(format!("unsupported format '{}'", tokens[2])));
    }
    let pattern = match tokens[3] {
        "real" | "integer" | "double" => false,
        "pattern" => true,
        other => return Err(mm_err(format!("unsupported field '{other}'"))),
    };
    let symmetry = match tokens[4] {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(mm_err(format!("unsupported symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(mm_err(format!("bad size line: {line}")));
                }
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| mm_err(format!("bad size line: {line}")))
                };
                let (m, n, nnz) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                size = Some((m, n, nnz));
                triplets.reserve(nnz);
            }
            Some((m, n, _)) => {
                let want = if pattern { 2 } else { 3 };
                if fields.len() < want {
                    return Err(mm_err(format!("bad entry line: {line}")));
                }
                let index = |s: &str, dim: usize| -> Result<usize> {
                    let k: usize = s.parse().map_err(|_| mm_err(format!("bad index in: {line}")))?;
                    if k == 0 || k > dim {
                        return Err(mm_err(format!("index {k} out of range 1..={dim}")));
                    }
                    Ok(k - 1)
                };
                let i = index(fields[0], m)?;
                let j = index(fields[1], n)?;
                let v = if pattern {
                    1.0
                } else {
                    fields[2]
                        .parse::<f64>()
                        .map_err(|_| mm_err(format!("bad value in: {line}")))?
                };
                triplets.push((i, j, v));
                if i != j {
                    match symmetry {
                        Symmetry::General => {}
                        Symmetry::Symmetric => triplets.push((j, i, v)),
                        Symmetry::SkewSymmetric => triplets.push((j, i, -v)),
                    }
                }
            }
        }
    }
    let (m, n, nnz) = size.ok_or_else(|| mm_err("missing size line"))?;
    let stored = if symmetry == Symmetry::General {
        triplets.len()
    } else {
        triplets
            .iter()
            .filter(|(i, j, _)| match symmetry {
                Symmetry::Symmetric | Symmetry::SkewSymmetric => i >= j,
                Symmetry::General => true,
            })
            .count()
    };
    if stored != nnz {
        return Err(mm_err(format!("expected {nnz} entries, found {stored}")));
    }
    SparseMatrix::from_triplets(m, n, &triplets)
}

/// Writes `coordinate real general` with 1-based indices and round-trip precision.
pub fn write_matrix_market<W: Write>(a: &SparseMatrix, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for (i, j, v) in a.iter() {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    read_matrix_market(File::open(path)?)
}

pub fn write_matrix_market_file(a: &SparseMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_matrix_market(a, File::create(path)?)
}

pub fn write_vector<W: Write>(x: &[f64], writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for v in x {
        writeln!(w, "{v:e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vector<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        out.push(
            t.parse::<f64>()
                .map_err(|_| mm_err(format!("bad vector entry: {t}")))?,
        );
    }
    Ok(out)
}
