//! CSV reading and writing for matrices and series. Values are written with
//! 17 significant digits so a write-then-read round trip is bit-exact.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::varproc::TimeSeries;

fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_rows<'a>(rows: impl Iterator<Item = &'a [f64]>) -> String {
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| fmt_value(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn parse_line(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {lineno}: {tok:?} is not a number")))
        })
        .collect()
}

/// Parses rows of numbers; all rows must have equal length.
fn parse_rows<'a>(lines: impl Iterator<Item = (usize, &'a str)>) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines {
        let row = parse_line(line, lineno)?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse(format!(
                    "line {lineno}: expected {} values, found {}",
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn matrix_to_csv(m: &DenseMatrix) -> String {
    format_rows((0..m.rows()).map(|i| m.row(i)))
}

pub fn matrix_from_csv(text: &str) -> Result<DenseMatrix> {
    let rows = parse_rows(content_lines(text))?;
    if rows.is_empty() {
        return Err(Error::Empty);
    }
    DenseMatrix::from_rows(&rows)
}

pub fn series_to_csv(ts: &TimeSeries) -> String {
    format_rows((0..ts.t_len()).map(|t| ts.row(t)))
}

/// Parses a series; a first line whose first token is not numeric is taken
/// as a header and skipped.
pub fn series_from_csv(text: &str) -> Result<TimeSeries> {
    let mut lines = content_lines(text).peekable();
    if let Some((_, first)) = lines.peek() {
        let tok = first.split(',').next().unwrap_or("").trim();
        if tok.parse::<f64>().is_err() {
            lines.next();
        }
    }
    let rows = parse_rows(lines)?;
    if rows.is_empty() {
        return Err(Error::Empty);
    }
    TimeSeries::from_rows(&rows)
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    fs::write(path, matrix_to_csv(m))?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    matrix_from_csv(&fs::read_to_string(path)?)
}

pub fn write_series(path: &Path, ts: &TimeSeries) -> Result<()> {
    fs::write(path, series_to_csv(ts))?;
    Ok(())
}

pub fn read_series(path: &Path) -> Result<TimeSeries> {
    series_from_csv(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_exact() {
        let vals = [
            0.1,
            -1.0 / 3.0,
            1e-300,
            f64::MAX,
            -0.0,
            123_456_789.123_456_79,
        ];
        let m = DenseMatrix::new(2, 3, vals.to_vec()).unwrap();
        let back = matrix_from_csv(&matrix_to_csv(&m)).unwrap();
        for (a, b) in m.as_slice().iter().zip(back.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn header_detection() {
        let with = series_from_csv("a,b\n1,2\n3,4\n").unwrap();
        let without = series_from_csv("1,2\n3,4\n").unwrap();
        assert_eq!(with, without);
        assert_eq!(with.t_len(), 2);
        assert_eq!(with.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(matrix_from_csv("1,2\n3\n"), Err(Error::Parse(_))));
        assert!(matches!(matrix_from_csv("1,x\n"), Err(Error::Parse(_))));
        assert_eq!(matrix_from_csv("\n"), Err(Error::Empty));
        assert!(series_from_csv("a,b\n").is_err());
        assert!(matrix_from_csv("nan,1\n").is_err());
    }
}
