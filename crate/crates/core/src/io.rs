//! Artifact writers. Every file goes through a temporary sibling and a
//! rename so readers never see a partial file.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::new(std::io::ErrorKind::InvalidInput, "no file name")))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Specification(format!("{}: {e}", path.display())))
}

/// CSV table built in memory and written atomically.
pub struct Csv {
    writer: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Self { writer }
    }

    pub fn row<S: AsRef<[u8]>>(&mut self, cells: &[S]) {
        self.writer.write_record(cells).expect("writing to memory");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("flushing to memory")
    }

    pub fn write(self, path: &Path) -> Result<()> {
        write_atomic(path, &self.into_bytes())
    }
}

/// Shortest round-trip float formatting for artifacts.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

/// Header and rows of a CSV file; ragged rows are rejected.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let bad = |e: csv::Error| Error::Specification(format!("{}: {e}", path.display()));
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header: Vec<String> = reader.headers().map_err(bad)?.iter().map(str::to_string).collect();
    if header.is_empty() {
        return Err(Error::Specification(format!("{} is empty", path.display())));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        rows.push(rec.map_err(bad)?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

/// Column lookup by name.
pub fn column(header: &[String], name: &str, path: &Path) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Specification(format!("{}: missing column {name}", path.display())))
}

/// Parses one numeric cell.
pub fn parse_cell<T: std::str::FromStr>(cell: &str, path: &Path, row: usize) -> Result<T> {
    cell.trim()
        .parse()
        .map_err(|_| Error::Specification(format!("{}: row {row}: bad number {cell:?}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, -3.25e-7, 55.0, 1.0 / 3.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_round_trip_and_ragged_rows() {
        let dir = std::env::temp_dir().join(format!("spirosnap-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("t.csv");
        let mut c = Csv::new(&["a", "b"]);
        c.row(&["1", "x,y"]);
        c.write(&p).unwrap();
        let (h, rows) = read_csv(&p).unwrap();
        assert_eq!(h, ["a", "b"]);
        assert_eq!(rows, vec![vec!["1".to_string(), "x,y".to_string()]]);
        fs::write(&p, "a,b\n1\n").unwrap();
        assert!(read_csv(&p).is_err());
        fs::remove_dir_all(&dir).unwrap();
    }
}
