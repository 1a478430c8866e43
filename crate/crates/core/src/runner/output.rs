//! CSV tables and checksummed output files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Result;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "LMG_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl Cell {
    pub fn as_f64(self) -> f64 {
        match self {
            Cell::Num(x) => x,
            Cell::Int(i) => i as f64,
        }
    }
}

/// One CSV file: a header row and numeric rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_header(name: impl Into<String>, header: Vec<String>) -> Self {
        Self { name: name.into(), header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }

    /// Twelve significant digits, `\n` line endings.
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                match c {
                    Cell::Num(x) => write!(s, "{}", fmt_num(*x)),
                    Cell::Int(v) => write!(s, "{v}"),
                }
                .expect("writing to a String");
            }
            s.push('\n');
        }
        s
    }
}

fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        // no "-0" in outputs
        return format!("{:.11e}", 0.0);
    }
    format!("{x:.11e}")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `contents` to `dir/name` and returns its record.
pub fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<FileRecord> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(FileRecord { path: name.to_string(), sha256: sha256_hex(contents), bytes: contents.len() as u64 })
}

pub fn write_tables(dir: &Path, tables: &[Table]) -> Result<Vec<FileRecord>> {
    tables.iter().map(|t| write_file(dir, &t.file_name(), t.to_csv().as_bytes())).collect()
}

/// Explicit directory, else `$LMG_OUT_DIR/<name>`, else `lmg-out/<name>`.
pub fn resolve_output_dir(explicit: Option<&Path>, name: &str) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(name),
        _ => PathBuf::from("lmg-out").join(name),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_twelve_significant_digits() {
        let mut t = Table::new("x", &["time_ns", "k", "v"]);
        t.push(vec![Cell::Num(1.0 / 3.0), Cell::Int(4), Cell::Num(-0.0)]);
        let csv = t.to_csv();
        assert_eq!(csv, "time_ns,k,v\n3.33333333333e-1,4,0.00000000000e0\n");
        assert_eq!(t.column("k"), Some(vec![4.0]));
    }

    #[test]
    fn checksum_matches_known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
