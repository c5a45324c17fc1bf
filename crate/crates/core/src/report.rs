//! CSV and JSON artifact writers.
//!
//! CSV files carry a header row, `,` separators and `\n` line endings; reals
//! are written with 17 significant digits. JSON is pretty-printed UTF-8 with
//! keys in struct declaration order and a trailing newline.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::discretization::Mesh;
use crate::error::Result;

/// Formats a real with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV table built column-wise.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}

/// `j,lambda` rows.
pub fn eigenvalue_csv(values: &[f64]) -> Csv {
    let mut csv = Csv::new(["j", "lambda"]);
    for (j, l) in values.iter().enumerate() {
        csv.push(vec![(j + 1).to_string(), fmt_real(*l)]);
    }
    csv
}

/// Nodal values on all mesh nodes (boundary zeros included), one column per
/// vector.
pub fn nodal_csv(mesh: &Mesh, names: &[String], vectors: &[DVector<f64>]) -> Csv {
    let mut header = vec!["x".to_string()];
    header.extend(names.iter().cloned());
    let mut csv = Csv::new(header);
    for (node, &x) in mesh.nodes().iter().enumerate() {
        let mut row = vec![fmt_real(x)];
        for v in vectors {
            row.push(fmt_real(mesh.dof(node).map_or(0.0, |i| v[i])));
        }
        csv.push(row);
    }
    csv
}

/// Dense row-major matrix with columns `c1, c2, …`.
pub fn matrix_csv(m: &DMatrix<f64>) -> Csv {
    let mut csv = Csv::new((1..=m.ncols()).map(|j| format!("c{j}")));
    for i in 0..m.nrows() {
        csv.push((0..m.ncols()).map(|j| fmt_real(m[(i, j)])).collect());
    }
    csv
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| crate::error::Error::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for v in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 1.0] {
            assert_eq!(fmt_real(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn eigenvalue_table_layout() {
        let s = eigenvalue_csv(&[1.0, 2.5]).render();
        assert_eq!(s, "j,lambda\n1,1.0000000000000000e0\n2,2.5000000000000000e0\n");
    }

    #[test]
    fn nodal_table_pads_boundary() {
        let mesh = Mesh::uniform(0.0, 1.0, 2).unwrap();
        let s = nodal_csv(&mesh, &["u".into()], &[DVector::from_element(1, 3.0)]).render();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].ends_with(",0.0000000000000000e0"));
        assert!(lines[2].ends_with(",3.0000000000000000e0"));
    }
}
