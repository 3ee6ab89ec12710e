//! Output directory bookkeeping and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::spec::Format;
use crate::RunError;

pub const MANIFEST: &str = "manifest.json";
pub const SPEC_COPY: &str = "spec.toml";

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub name: String,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub spec_sha256: String,
    pub seed: Option<u64>,
    pub workers: usize,
    pub started_at: String,
    pub finished_at: String,
    pub stages: Vec<Stage>,
    pub outputs: Vec<OutputFile>,
}

/// Files written by one command. Writes are serialized through this value;
/// every file is checksummed as it is written.
pub struct OutputSet {
    dir: PathBuf,
    command: String,
    spec_text: String,
    seed: Option<u64>,
    workers: usize,
    started_at: String,
    stages: Vec<Stage>,
    files: Vec<OutputFile>,
}

impl OutputSet {
    pub fn create(
        dir: &Path,
        command: &str,
        spec_text: String,
        seed: Option<u64>,
        workers: usize,
    ) -> Result<Self, RunError> {
        std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
        let mut set = Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            spec_text: String::new(),
            seed,
            workers,
            started_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            stages: Vec::new(),
            files: Vec::new(),
        };
        set.write(SPEC_COPY, spec_text.as_bytes())?;
        set.spec_text = spec_text;
        Ok(set)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| RunError::io(&path, e))?;
        self.files.push(OutputFile {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| RunError::Runtime(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes `table` as `<stem>.csv` or `<stem>.json`.
    pub fn write_table(&mut self, stem: &str, table: &Table, format: Format) -> Result<(), RunError> {
        match format {
            Format::Csv => self.write(&format!("{stem}.csv"), table.to_csv().as_bytes()),
            Format::Json => self.write_json(&format!("{stem}.json"), table),
        }
    }

    /// Runs `f` and records its host wall-clock time under `name`.
    pub fn stage<R>(&mut self, name: &str, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let out = f();
        self.stages.push(Stage {
            name: name.to_string(),
            wall_clock_s: start.elapsed().as_secs_f64(),
        });
        out
    }

    /// Writes the manifest last so it can list every other file.
    pub fn finish(self) -> Result<Manifest, RunError> {
        let manifest = Manifest {
            schema_version: 1,
            tool: "ionforce",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            spec_sha256: sha256_hex(self.spec_text.as_bytes()),
            seed: self.seed,
            workers: self.workers,
            started_at: self.started_at,
            finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            stages: self.stages,
            outputs: self.files,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| RunError::Runtime(e.to_string()))?;
        text.push('\n');
        let path = self.dir.join(MANIFEST);
        std::fs::write(&path, text).map_err(|e| RunError::io(&path, e))?;
        Ok(manifest)
    }
}

/// Column-major numeric table. Non-finite values print as `inf`/`nan` in
/// CSV and `null` in JSON.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(Option<f64>),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x.is_finite().then_some(x))
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(cell_text).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn cell_text(cell: &Cell) -> String {
    match cell {
        Cell::Num(Some(x)) => format!("{x:e}"),
        Cell::Num(None) => "nan".to_string(),
        Cell::Int(i) => i.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

/// Matrix with a header of column keys: first header cell is `row_label`,
/// each row starts with its key.
pub fn matrix_csv(row_label: &str, column_keys: &[f64], row_keys: &[f64], columns: &[Vec<f64>]) -> String {
    let mut out = String::from(row_label);
    for k in column_keys {
        let _ = write!(out, ",{k:e}");
    }
    out.push('\n');
    for (r, key) in row_keys.iter().enumerate() {
        let _ = write!(out, "{key:e}");
        for col in columns {
            let _ = write!(out, ",{:e}", col[r]);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn csv_round_trips_floats() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![0.1f64.into(), (1.0f64 / 3.0).into()]);
        let csv = t.to_csv();
        let line = csv.lines().nth(1).unwrap();
        let values: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(values, vec![0.1, 1.0 / 3.0]);
    }

    #[test]
    fn matrix_layout() {
        let text = matrix_csv("t_s", &[1.0, 2.0], &[0.5], &[vec![3.0], vec![4.0]]);
        assert_eq!(text, "t_s,1e0,2e0\n5e-1,3e0,4e0\n");
    }
}
