//! CSV tables with fixed 12-significant-digit formatting and their JSON
//! sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};

/// Formats `x` with 12 significant digits, identically on every run.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    format!("{x:.11e}")
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Validation(e.to_string()))
    }
}

/// Output directory and file stem of one command.
#[derive(Debug, Clone)]
pub struct Sink {
    pub dir: PathBuf,
    pub stem: String,
}

impl Sink {
    pub fn path(&self, suffix: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{}{suffix}.{ext}", self.stem))
    }

    fn ensure_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(CliError::io(&self.dir))
    }

    /// Writes `table` as `<stem><suffix>.csv` and `sidecar` next to it.
    pub fn write_csv(&self, suffix: &str, table: &Table, sidecar: &impl Serialize) -> Result<PathBuf> {
        self.ensure_dir()?;
        let path = self.path(suffix, "csv");
        write(&path, &table.to_bytes()?)?;
        self.write_json(suffix, sidecar)?;
        Ok(path)
    }

    pub fn write_json(&self, suffix: &str, value: &impl Serialize) -> Result<PathBuf> {
        self.ensure_dir()?;
        let path = self.path(suffix, "json");
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        write(&path, &bytes)?;
        Ok(path)
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(CliError::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_precision() {
        assert_eq!(num(1.0), "1.00000000000e0");
        assert_eq!(num(-1.0 / 980.0), "-1.02040816327e-3");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(-0.0), "0");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec![num(0.5), "x".into()]);
        assert_eq!(String::from_utf8(t.to_bytes().unwrap()).unwrap(), "a,b\n5.00000000000e-1,x\n");
    }
}
