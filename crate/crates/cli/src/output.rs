//! CSV artifacts and the run manifest.
//!
//! Every CSV starts with a `# schema=1` comment line followed by the header.
//! Floats are written in shortest round-trip exponent form, so identical
//! inputs give byte-identical files.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) if x.is_nan() => "nan".into(),
            Cell::Num(x) if x.is_infinite() => if *x > 0.0 { "inf".into() } else { "-inf".into() },
            Cell::Num(x) => format!("{x:e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
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

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// One output table; `suffix` is appended to the run prefix in the file name.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub suffix: Option<&'static str>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(suffix: Option<&'static str>, header: Vec<&'static str>) -> Self {
        Self { suffix, header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self, prefix: &str) -> String {
        match self.suffix {
            Some(s) => format!("{prefix}_{s}.csv"),
            None => format!("{prefix}.csv"),
        }
    }

    pub fn render(&self) -> CliResult<Vec<u8>> {
        let mut buf = format!("# schema={SCHEMA_VERSION}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let err = |e: csv::Error| CliError::io("<csv buffer>", std::io::Error::other(e));
            w.write_record(&self.header).map_err(err)?;
            for row in &self.rows {
                w.write_record(row.iter().map(Cell::render)).map_err(err)?;
            }
            w.flush().map_err(|e| CliError::io("<csv buffer>", e))?;
        }
        Ok(buf)
    }

    /// Looks up a numeric column, for tests and summaries.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| *h == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[i] {
                    Cell::Num(x) => *x,
                    Cell::Int(k) => *k as f64,
                    Cell::Text(_) => f64::NAN,
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ToleranceRecord {
    pub rtol: f64,
    pub atol: f64,
}

/// Written as `<prefix>_manifest.json`. Holds nothing that varies between
/// identical runs: no timestamps, no worker count.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema: u32,
    pub version: &'static str,
    pub experiment: &'static str,
    pub config_sha256: String,
    pub n_max: usize,
    pub n_levels: usize,
    pub tolerances: ToleranceRecord,
    pub outputs: Vec<OutputRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes all tables and the manifest into `dir`, returning the paths.
pub fn write_run(dir: &Path, prefix: &str, tables: &[CsvTable], mut manifest: Manifest) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    for t in tables {
        let bytes = t.render()?;
        let name = t.file_name(prefix);
        let path = dir.join(&name);
        std::fs::write(&path, &bytes).map_err(|e| CliError::io(&path, e))?;
        manifest.outputs.push(OutputRecord { file: name, sha256: sha256_hex(&bytes), rows: t.rows.len() });
        written.push(path);
    }
    let path = dir.join(format!("{prefix}_manifest.json"));
    let mut json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::io(&path, std::io::Error::other(e)))?;
    json.push('\n');
    std::fs::write(&path, json).map_err(|e| CliError::io(&path, e))?;
    written.push(path);
    Ok(written)
}
