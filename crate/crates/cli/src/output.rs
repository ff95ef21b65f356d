use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Result rows under fixed column names, plus an optional free-form summary
/// that only the JSON form carries in full.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Option<Value>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new(), summary: None }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn with_summary(mut self, summary: impl Serialize) -> Self {
        self.summary = Some(serde_json::to_value(summary).unwrap_or(Value::Null));
        self
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn render<W: Write>(table: &Table, format: Format, out: W) -> io::Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&table.columns)?;
            for row in &table.rows {
                w.write_record(row.iter().map(cell))?;
            }
            w.flush()
        }
        Format::Json => {
            let rows: Vec<Map<String, Value>> = table
                .rows
                .iter()
                .map(|r| table.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect())
                .collect();
            let mut doc = Map::new();
            doc.insert("rows".into(), Value::from(rows.into_iter().map(Value::Object).collect::<Vec<_>>()));
            if let Some(s) = &table.summary {
                doc.insert("summary".into(), s.clone());
            }
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out)
        }
    }
}

/// Writes to `path`, or standard output when absent.
pub fn emit(table: &Table, format: Format, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|source| CliError::Write { path: p.into(), source })?;
            let mut w = BufWriter::new(file);
            render(table, format, &mut w)
                .and_then(|_| w.flush())
                .map_err(|source| CliError::Write { path: p.into(), source })
        }
        None => render(table, format, io::stdout().lock())
            .map_err(|source| CliError::Write { path: "<stdout>".into(), source }),
    }
}

/// Trial streams consumed by a run: trial `i` of `first..first + count`
/// draws from `derive_seed(seed, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StreamIds {
    pub first: u64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub config: Value,
    pub seed: u64,
    pub workers: usize,
    pub wall_clock_seconds: f64,
    pub streams: StreamIds,
}

/// SHA-256 of the compact JSON text of `config`. Objects serialise with
/// sorted keys, so the hash ignores key order in the source file.
pub fn config_hash(command: &str, config: &Value) -> String {
    let doc = serde_json::json!({ "command": command, "config": config });
    hex::encode(Sha256::digest(doc.to_string().as_bytes()))
}

/// `<out>.manifest.json` next to the result file.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn write_manifest(manifest: &RunManifest, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serialises") + "\n";
    std::fs::write(path, text).map_err(|source| CliError::Write { path: path.into(), source })
}
