//! File formats: datasets and coefficient matrices as CSV, with float
//! values printed in Rust's shortest round-trip form so write→read is
//! bitwise lossless.
//!
//! Dataset CSV: header `x1..xd,y1..yt`, one row per observation, labels
//! stored as the integers 1 / -1. The intercept column is not stored and
//! is re-added on load. Model CSV: no header, (1+d) rows by t columns,
//! row 0 holding the intercepts.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{CoefficientMatrix, TaskDataset};

fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn write_dataset_csv(path: &Path, data: &TaskDataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let d = data.d();
    let t = data.t();
    let mut header = Vec::with_capacity(d + t);
    for l in 1..=d {
        header.push(format!("x{l}"));
    }
    for j in 1..=t {
        header.push(format!("y{j}"));
    }
    w.write_record(&header)?;
    let features = data.features();
    let y = data.y();
    for i in 0..data.n() {
        let mut record = Vec::with_capacity(d + t);
        for l in 0..d {
            record.push(fmt(features[[i, l]]));
        }
        for j in 0..t {
            record.push(format!("{}", y[[i, j]] as i64));
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv(path: &Path) -> Result<TaskDataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    let d = names.iter().take_while(|h| h.starts_with('x')).count();
    let t = names.len() - d;
    if d == 0 || t == 0 {
        return Err(Error::Parse(format!(
            "{}: header must list x1..xd then y1..yt",
            path.display()
        )));
    }
    for (l, name) in names.iter().take(d).enumerate() {
        if **name != format!("x{}", l + 1) {
            return Err(Error::Parse(format!(
                "{}: expected column x{} but found {name}",
                path.display(),
                l + 1
            )));
        }
    }
    for (j, name) in names.iter().skip(d).enumerate() {
        if **name != format!("y{}", j + 1) {
            return Err(Error::Parse(format!(
                "{}: expected column y{} but found {name}",
                path.display(),
                j + 1
            )));
        }
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut n = 0;
    for record in reader.records() {
        let record = record?;
        if record.len() != d + t {
            return Err(Error::Parse(format!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                n + 1,
                record.len(),
                d + t
            )));
        }
        for (k, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                Error::Parse(format!(
                    "{}: row {} field {}: not a number: {field:?}",
                    path.display(),
                    n + 1,
                    k + 1
                ))
            })?;
            if k < d {
                features.push(value);
            } else {
                labels.push(value);
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::InvalidData(format!("{}: no data rows", path.display())));
    }
    let features = Array2::from_shape_vec((n, d), features)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let labels = Array2::from_shape_vec((n, t), labels)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    TaskDataset::from_features(features.view(), labels)
}

pub fn write_model_csv(path: &Path, b: &CoefficientMatrix) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    let m = b.matrix();
    for l in 0..m.nrows() {
        let record: Vec<String> = (0..m.ncols()).map(|j| fmt(m[[l, j]])).collect();
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_model_csv(path: &Path) -> Result<CoefficientMatrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row: Result<Vec<f64>> = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    Error::Parse(format!(
                        "{}: row {}: not a number: {field:?}",
                        path.display(),
                        i + 1
                    ))
                })
            })
            .collect();
        rows.push(row?);
    }
    CoefficientMatrix::new(rows_to_matrix(&rows)?)
}

/// Row-major nested vectors for JSON embedding.
pub fn matrix_to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    if rows.is_empty() {
        return Err(Error::InvalidData("matrix has no rows".into()));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidData("matrix rows have unequal lengths".into()));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), ncols), flat)
        .map_err(|e| Error::InvalidData(e.to_string()))
}
