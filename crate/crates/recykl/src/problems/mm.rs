//! Matrix Market exchange format: `coordinate real symmetric|general` for
//! sparse matrices and `array real general` for dense ones.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SparseSpdMatrix};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { file: path.to_path_buf(), source }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { file: path.to_path_buf(), line, message: message.into() }
}

/// Data lines of a Matrix Market file with their 1-based line numbers.
struct Body<'t> {
    header: Vec<String>,
    lines: Vec<(usize, &'t str)>,
}

fn split<'t>(path: &Path, text: &'t str) -> Result<Body<'t>> {
    let mut it = text.lines().enumerate();
    let (_, first) = it.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let header: Vec<String> = first.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if header.len() != 5 || header[0] != "%%matrixmarket" || header[1] != "matrix" {
        return Err(parse_err(path, 1, format!("malformed header `{first}`")));
    }
    let lines = it
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'))
        .collect();
    Ok(Body { header, lines })
}

fn fields<'s, const K: usize>(path: &Path, line: usize, s: &'s str) -> Result<[&'s str; K]> {
    let v: Vec<&str> = s.split_whitespace().collect();
    v.try_into().map_err(|v: Vec<&str>| {
        parse_err(path, line, format!("expected {K} fields, found {}", v.len()))
    })
}

fn num<T: std::str::FromStr>(path: &Path, line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| parse_err(path, line, format!("invalid number `{s}`")))
}

pub fn read_sparse(path: &Path) -> Result<SparseSpdMatrix> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let body = split(path, &text)?;
    let h = &body.header;
    if h[2] != "coordinate" || h[3] != "real" || !(h[4] == "symmetric" || h[4] == "general") {
        return Err(parse_err(path, 1, format!("unsupported format `{}`", h[2..].join(" "))));
    }
    let symmetric = h[4] == "symmetric";
    let mut lines = body.lines.into_iter();
    let (sl, size) = lines.next().ok_or_else(|| parse_err(path, 1, "missing size line"))?;
    let [r, c, nnz] = fields::<3>(path, sl, size)?;
    let (rows, cols, nnz): (usize, usize, usize) =
        (num(path, sl, r)?, num(path, sl, c)?, num(path, sl, nnz)?);
    if rows != cols {
        return Err(parse_err(path, sl, format!("matrix is {rows}x{cols}, not square")));
    }
    let mut trip = Vec::with_capacity(nnz);
    for (ln, l) in lines {
        let [i, j, v] = fields::<3>(path, ln, l)?;
        let (i, j): (usize, usize) = (num(path, ln, i)?, num(path, ln, j)?);
        let v: f64 = num(path, ln, v)?;
        if i == 0 || j == 0 || i > rows || j > rows {
            return Err(parse_err(path, ln, format!("index ({i}, {j}) out of range")));
        }
        if symmetric && i < j {
            return Err(parse_err(path, ln, "symmetric storage requires the lower triangle"));
        }
        trip.push((i - 1, j - 1, v));
    }
    if trip.len() != nnz {
        return Err(parse_err(path, sl, format!("declared {nnz} entries, found {}", trip.len())));
    }
    if symmetric {
        SparseSpdMatrix::from_lower_triplets(rows, &trip)
    } else {
        SparseSpdMatrix::from_triplets(rows, &trip)
    }
}

pub fn write_sparse(path: &Path, a: &SparseSpdMatrix) -> Result<()> {
    let f = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    let mut lower = Vec::new();
    for i in 0..a.n() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j <= i {
                lower.push((i, j, v));
            }
        }
    }
    let mut out = || -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", a.n(), a.n(), lower.len())?;
        for (i, j, v) in &lower {
            writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
        }
        w.flush()
    };
    out().map_err(io_err(path))
}

pub fn read_dense(path: &Path) -> Result<DenseMatrix> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let body = split(path, &text)?;
    let h = &body.header;
    if h[2] != "array" || h[3] != "real" || h[4] != "general" {
        return Err(parse_err(path, 1, format!("unsupported format `{}`", h[2..].join(" "))));
    }
    let mut lines = body.lines.into_iter();
    let (sl, size) = lines.next().ok_or_else(|| parse_err(path, 1, "missing size line"))?;
    let [r, c] = fields::<2>(path, sl, size)?;
    let (rows, cols): (usize, usize) = (num(path, sl, r)?, num(path, sl, c)?);
    let mut data = Vec::with_capacity(rows * cols);
    for (ln, l) in lines {
        let [v] = fields::<1>(path, ln, l)?;
        data.push(num(path, ln, v)?);
    }
    if data.len() != rows * cols {
        return Err(parse_err(
            path,
            sl,
            format!("declared {} values, found {}", rows * cols, data.len()),
        ));
    }
    DenseMatrix::from_col_major(rows, cols, data)
}

pub fn write_dense(path: &Path, m: &DenseMatrix) -> Result<()> {
    let f = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    let mut out = || -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix array real general")?;
        writeln!(w, "{} {}", m.rows(), m.cols())?;
        for v in m.data() {
            writeln!(w, "{v:e}")?;
        }
        w.flush()
    };
    out().map_err(io_err(path))
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let m = read_dense(path)?;
    if m.cols() != 1 {
        return Err(parse_err(path, 1, format!("expected one column, found {}", m.cols())));
    }
    Ok(m.data().to_vec())
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    write_dense(path, &DenseMatrix::from_col_major(v.len(), 1, v.to_vec())?)
}
