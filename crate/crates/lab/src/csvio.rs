//! CSV files: header row, LF line endings, shortest round-trip floats,
//! written to a temporary file and renamed into place.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{LabError, Result};

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| LabError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| LabError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| LabError::io(path, e.error))?;
    Ok(())
}

/// Serializes `rows` under `header`. The header is written even when there
/// are no rows.
pub fn to_csv_bytes<T: Serialize>(header: &[&str], rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let err = |e: csv::Error| LabError::parse("<csv>", e);
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.into_inner().map_err(|e| LabError::parse("<csv>", e))
}

pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    write_atomic(path, &to_csv_bytes(header, rows)?)
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = File::open(path).map_err(|e| LabError::io(path, e))?;
    csv::Reader::from_reader(f)
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| LabError::parse(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    struct Row {
        a: u32,
        x: f64,
        y: Option<f64>,
    }

    #[test]
    fn round_trip_and_format() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let rows = vec![
            Row { a: 1, x: 0.1, y: None },
            Row { a: 2, x: 1.0 / 3.0, y: Some(-2.5e-7) },
        ];
        write_csv(&p, &["a", "x", "y"], &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("a,x,y\n1,0.1,\n"));
        assert!(!text.contains('\r'));
        assert_eq!(read_csv::<Row>(&p).unwrap(), rows);
    }

    #[test]
    fn header_only_when_empty() {
        let bytes = to_csv_bytes::<Row>(&["a", "x", "y"], &[]).unwrap();
        assert_eq!(bytes, b"a,x,y\n");
    }

    #[test]
    fn missing_file_is_io_error() {
        let e = read_csv::<Row>(Path::new("/nonexistent/x.csv")).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }
}
