//! CSV and JSON input helpers. Every failure names the file and line.

use std::fs::File;
use std::path::Path;

use hdtest::numerics::Matrix;
use hdtest::{Error, Result};
use serde::de::DeserializeOwned;

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

/// Header names and numeric rows of a CSV file with a header row.
pub fn read_numeric_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let file = File::open(path)?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(parse_err(path, 1, "missing header row"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(parse_err(path, line, format!("expected {} fields, found {}", header.len(), rec.len())));
        }
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| parse_err(path, line, format!("`{f}` is not a number"))))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(parse_err(path, line, format!("non-finite value {bad}")));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 2, "no data rows"));
    }
    Ok((header, rows))
}

/// A regression dataset: header `y,x1,...,xp`.
pub fn read_dataset(path: &Path) -> Result<hdtest::covmodels::Dataset> {
    let (header, rows) = read_numeric_csv(path)?;
    if header[0] != "y" {
        return Err(parse_err(path, 1, format!("first column must be `y`, found `{}`", header[0])));
    }
    for (j, h) in header.iter().enumerate().skip(1) {
        if *h != format!("x{j}") {
            return Err(parse_err(path, 1, format!("column {} must be `x{j}`, found `{h}`", j + 1)));
        }
    }
    if header.len() < 2 {
        return Err(parse_err(path, 1, "no covariate columns"));
    }
    let y = rows.iter().map(|r| r[0]).collect();
    let x_rows: Vec<Vec<f64>> = rows.iter().map(|r| r[1..].to_vec()).collect();
    hdtest::covmodels::Dataset::new(y, Matrix::from_rows(&x_rows)?)
}

/// Data matrix for the graph tests: one column per node.
pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let (_, rows) = read_numeric_csv(path)?;
    Matrix::from_rows(&rows)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))
}
