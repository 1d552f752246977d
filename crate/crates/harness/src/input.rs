use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{HarnessError, Result};

/// Reads a numeric matrix, one observation per row.
pub fn read_matrix(path: &Path, header: bool) -> Result<DMatrix<f64>> {
    let fail = |message: String| HarnessError::Input {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| fail(e.to_string()))?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| fail(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(fail(format!("row {} has {} fields, expected {c}", i + 1, record.len())))
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| fail(format!("row {}: '{field}' is not a number", i + 1)))?;
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| fail("no data rows".into()))?;
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

/// Writes a matrix without a header, using the shortest round-trip float format.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| HarnessError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writer.write_record(&fields).map_err(|e| HarnessError::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    writer
        .flush()
        .map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))
}
