//! CSV reading/writing for designs, responses and prediction tables.
//!
//! Comma-separated, '.' decimal point, no locale dependence. A single header
//! row is auto-detected (a first row that does not parse as numbers). All
//! writes go through a temp-then-rename so failed runs leave no partial
//! output files behind.

use std::path::{Path, PathBuf};

use crate::error::{KrigError, Result};
use crate::linalg::Matrix;

fn data_err(path: &Path, msg: String) -> KrigError {
    KrigError::Data(format!("{}: {msg}", path.display()))
}

/// Read a numeric matrix, skipping an optional header row.
pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(path, format!("cannot open: {e}")))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (index, record) in reader.records().enumerate() {
        let line = index + 1;
        let record = record.map_err(|e| data_err(path, format!("line {line}: {e}")))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(values) => {
                if let Some(w) = width {
                    if values.len() != w {
                        return Err(data_err(
                            path,
                            format!("line {line}: expected {w} columns, found {}", values.len()),
                        ));
                    }
                } else {
                    width = Some(values.len());
                }
                rows.push(values);
            }
            Err(e) => {
                // a non-numeric first row is a header; anywhere else it is bad data
                if index == 0 {
                    continue;
                }
                return Err(data_err(path, format!("line {line}: {e}")));
            }
        }
    }
    if rows.is_empty() {
        return Err(data_err(path, "no data rows".into()));
    }
    Matrix::from_rows(&rows)
}

/// Read a single-column (or multi-column) response file.
pub fn read_responses(path: &Path) -> Result<Matrix> {
    read_matrix(path)
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".tmp-{}", std::process::id()));
    path.with_file_name(name)
}

/// Write text atomically: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = temp_path(path);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Canonical float formatting: shortest representation that round-trips,
/// identical across runs for identical bits.
pub fn format_value(v: f64) -> String {
    format!("{v}")
}

/// Write a matrix as CSV with optional header names.
pub fn write_matrix(path: &Path, m: &Matrix, headers: Option<&[&str]>) -> Result<()> {
    let mut out = String::new();
    if let Some(h) = headers {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format_value(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_atomic(path, &out)
}

/// Write named columns of equal length as CSV.
pub fn write_columns(path: &Path, columns: &[(&str, &[f64])]) -> Result<()> {
    let n = columns.first().map_or(0, |(_, c)| c.len());
    if columns.iter().any(|(_, c)| c.len() != n) {
        return Err(KrigError::DimensionMismatch(
            "unequal column lengths".into(),
        ));
    }
    let mut out = String::new();
    let names: Vec<&str> = columns.iter().map(|(name, _)| *name).collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for i in 0..n {
        let row: Vec<String> = columns.iter().map(|(_, c)| format_value(c[i])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_atomic(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn roundtrip_with_and_without_header() {
        let dir = tempdir().unwrap();
        let m = Matrix::from_rows(&[vec![1.5, -2.25], vec![0.1, 1e-9]]).unwrap();

        let bare = dir.path().join("bare.csv");
        write_matrix(&bare, &m, None).unwrap();
        assert_eq!(read_matrix(&bare).unwrap(), m);

        let headed = dir.path().join("headed.csv");
        write_matrix(&headed, &m, Some(&["x1", "x2"])).unwrap();
        assert_eq!(read_matrix(&headed).unwrap(), m);
    }

    #[test]
    fn malformed_row_names_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "1.0,2.0\n3.0,oops\n").unwrap();
        match read_matrix(&path) {
            Err(KrigError::Data(msg)) => assert!(msg.contains("line 2"), "{msg}"),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn ragged_rows_rejected_with_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ragged.csv");
        std::fs::write(&path, "1.0,2.0\n3.0\n").unwrap();
        match read_matrix(&path) {
            Err(KrigError::Data(msg)) => assert!(msg.contains("line 2"), "{msg}"),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        std::fs::write(&path, "").unwrap();
        assert!(read_matrix(&path).is_err());
    }

    #[test]
    fn atomic_write_leaves_no_temp_files() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "a,b\n").unwrap();
        let names: Vec<String> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, vec!["out.csv".to_string()]);
    }

    #[test]
    fn exact_value_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("vals.csv");
        let values = vec![std::f64::consts::PI, 1.0 / 3.0, 6.02214076e23, -0.1];
        write_columns(&path, &[("v", &values)]).unwrap();
        let back = read_matrix(&path).unwrap();
        for (a, b) in values.iter().zip(back.col_vec(0)) {
            assert_eq!(*a, b, "value changed across round trip");
        }
    }
}
