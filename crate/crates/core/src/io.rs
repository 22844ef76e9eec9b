//! System files and CSV output.
//!
//! Systems are stored as JSON objects
//! `{"name": string?, "A": [[f64]], "B": [[f64]], "C": [[f64]], "D": [[f64]]}`.
//! Empty `A`, `B`, `C` arrays describe a static gain `D`.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{validate, StateSpace};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
}

/// Convert nested rows into a matrix. `expect_cols` fills in the column count
/// when `rows` is empty.
pub fn matrix_from_rows(rows: &[Vec<f64>], label: &str, expect_cols: usize) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Ok(DMatrix::zeros(0, expect_cols));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse(format!("matrix {label} has ragged rows")));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect()
}

impl SystemFile {
    pub fn into_system(self) -> Result<StateSpace> {
        let d = matrix_from_rows(&self.d, "D", 0)?;
        let (nz, nw) = d.shape();
        let a = matrix_from_rows(&self.a, "A", 0)?;
        let n = a.nrows();
        let mut b = matrix_from_rows(&self.b, "B", nw)?;
        let mut c = matrix_from_rows(&self.c, "C", n)?;
        // `[[], []]`-style encodings of n = 0 parse as r x 0
        if n == 0 && b.ncols() == 0 {
            b = DMatrix::zeros(0, nw);
        }
        if n == 0 && c.is_empty() {
            c = DMatrix::zeros(nz, 0);
        }
        let sys = validate(a, b, c, d)?;
        Ok(match self.name {
            Some(name) => sys.with_name(name),
            None => sys,
        })
    }

    pub fn from_system(sys: &StateSpace) -> Self {
        SystemFile {
            name: sys.name().map(str::to_owned),
            a: matrix_to_rows(sys.a()),
            b: matrix_to_rows(sys.b()),
            c: matrix_to_rows(sys.c()),
            d: matrix_to_rows(sys.d()),
        }
    }
}

pub fn parse_system(text: &str) -> Result<StateSpace> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_system()
}

pub fn read_system(path: impl AsRef<Path>) -> Result<StateSpace> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let sys = parse_system(&text)?;
    if sys.name().is_none() {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            return Ok(sys.with_name(stem));
        }
    }
    Ok(sys)
}

pub fn system_to_json(sys: &StateSpace) -> String {
    serde_json::to_string_pretty(&SystemFile::from_system(sys)).expect("system serializes")
}

/// Parse a JSON matrix literal such as `[[1, -1]]`.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let m = matrix_from_rows(&rows, "M", 0)?;
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Parse("matrix has non-finite entries".into()));
    }
    Ok(m)
}

/// Write a header plus rows of numbers as CSV.
pub fn write_csv<W: Write>(mut out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> std::io::Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_encodings() {
        let s = parse_system(r#"{"A": [], "B": [], "C": [], "D": [[1, -1]]}"#).unwrap();
        assert_eq!((s.n(), s.n_w(), s.n_z()), (0, 2, 1));
        let s = parse_system(r#"{"A": [], "B": [], "C": [[]], "D": [[1, -1]]}"#).unwrap();
        assert_eq!(s.n(), 0);
    }

    #[test]
    fn ragged_rows_rejected() {
        let e = parse_system(r#"{"A": [[1, 2], [3]], "B": [], "C": [], "D": [[1]]}"#).unwrap_err();
        assert!(matches!(e, Error::Parse(_)));
    }

    #[test]
    fn json_round_trip() {
        let g = crate::fixtures::example6();
        let back = parse_system(&system_to_json(&g)).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn matrix_literal() {
        let m = parse_matrix("[[1,-1]]").unwrap();
        assert_eq!(m.shape(), (1, 2));
        assert_eq!(m[(0, 1)], -1.0);
    }
}
