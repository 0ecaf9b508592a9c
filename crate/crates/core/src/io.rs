//! Dataset files: headerless CSV and the `ADMH` little-endian binary layout.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const DATASET_MAGIC: &[u8; 4] = b"ADMH";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    Csv,
    Binary,
}

pub fn load_dataset(path: &Path, format: DataFormat) -> Result<Dataset> {
    let rows = match format {
        DataFormat::Csv => read_csv_rows(path)?,
        DataFormat::Binary => read_binary_rows(&fs::read(path)?)?,
    };
    let dim = rows.first().map(Vec::len).ok_or(Error::EmptyInput)?;
    Dataset::from_rows(dim, &rows)
}

/// Parses comma-separated reals, one point per non-blank line. All rows must
/// share the first row's width.
pub fn read_csv_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    parse_csv_rows(&text, path)
}

pub(crate) fn parse_csv_rows(text: &str, path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg,
        };
        let row = line
            .split(',')
            .map(|f| {
                let f = f.trim();
                match f.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    Ok(v) => Err(err(format!("non-finite value {v}"))),
                    Err(e) => Err(err(format!("bad number `{f}`: {e}"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(err(format!(
                    "expected {} fields, found {}",
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn read_binary_rows(bytes: &[u8]) -> Result<Vec<Vec<f64>>> {
    let header = 4 + 4 + 8 + 4;
    if bytes.len() < header {
        return Err(Error::Format("truncated dataset header".into()));
    }
    if &bytes[..4] != DATASET_MAGIC {
        return Err(Error::Format("bad dataset magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != DATASET_VERSION {
        return Err(Error::Format(format!("unsupported dataset version {version}")));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if d == 0 {
        return Err(Error::Format("zero dimension".into()));
    }
    let expected = n
        .checked_mul(d)
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| Error::Format("size overflow".into()))?;
    let body = &bytes[header..];
    if body.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} payload bytes, found {}",
            body.len()
        )));
    }
    Ok(body
        .chunks_exact(8 * d)
        .map(|row| {
            row.chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect()
        })
        .collect())
}

pub fn write_binary(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let d = rows.first().map(Vec::len).ok_or(Error::EmptyInput)?;
    let mut buf = Vec::with_capacity(20 + rows.len() * d * 8);
    buf.extend_from_slice(DATASET_MAGIC);
    buf.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    buf.extend_from_slice(&(rows.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(d as u32).to_le_bytes());
    for row in rows {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        for v in row {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn write_csv(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_two_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        fs::write(&path, "1,0\n0,1").unwrap();
        let ds = load_dataset(&path, DataFormat::Csv).unwrap();
        assert_eq!((ds.len(), ds.dim()), (2, 2));
        assert_eq!(ds.get(1).unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn binary_three_by_four() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..4).map(|j| (i * 4 + j) as f64).collect())
            .collect();
        write_binary(&path, &rows).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 20 + 12 * 8);
        let ds = load_dataset(&path, DataFormat::Binary).unwrap();
        assert_eq!((ds.len(), ds.dim()), (3, 4));
        assert_eq!(ds.get(2).unwrap(), &[8.0, 9.0, 10.0, 11.0]);
    }

    #[test]
    fn ragged_csv_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        fs::write(&path, "1,0\n0,1,2\n").unwrap();
        match load_dataset(&path, DataFormat::Csv) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_and_malformed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        fs::write(&path, "\n\n").unwrap();
        assert!(matches!(load_dataset(&path, DataFormat::Csv), Err(Error::EmptyInput)));
        fs::write(&path, "1,abc\n").unwrap();
        assert!(matches!(load_dataset(&path, DataFormat::Csv), Err(Error::Parse { .. })));

        let bin = dir.path().join("x.bin");
        fs::write(&bin, b"ADMX\x01\0\0\0").unwrap();
        assert!(matches!(load_dataset(&bin, DataFormat::Binary), Err(Error::Format(_))));
    }
}
