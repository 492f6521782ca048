//! Versioned JSON report envelope and CSV side files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::{Format, RunConfig};

pub const REPORT_SCHEMA: &str = "chist-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Refused,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Refused => 2,
        }
    }
}

/// Rows for one CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// File name with characters outside `[A-Za-z0-9_-]` replaced.
    pub fn file_name(&self) -> String {
        let stem: String = self
            .name
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        format!("{stem}.csv")
    }
}

/// What a task produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub result: Value,
    pub tables: Vec<CsvTable>,
}

#[derive(Debug, Serialize)]
pub struct Report<'a> {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub generated_at: String,
    pub status: Status,
    pub exit_code: i32,
    pub config: &'a RunConfig,
    pub result: &'a Value,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("non-finite number at {0}")]
    NonFinite(String),
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Converts to JSON, refusing non-finite floats. serde_json maps NaN and
/// infinities to `null`, and report payloads never contain `null`
/// otherwise, so any `null` marks a non-finite value.
pub fn to_finite_value<T: Serialize>(value: &T) -> Result<Value, ReportError> {
    let v = serde_json::to_value(value)?;
    match find_null(&v, "$") {
        Some(path) => Err(ReportError::NonFinite(path)),
        None => Ok(v),
    }
}

fn find_null(v: &Value, path: &str) -> Option<String> {
    match v {
        Value::Null => Some(path.to_string()),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .find_map(|(i, x)| find_null(x, &format!("{path}[{i}]"))),
        Value::Object(map) => map.iter().find_map(|(k, x)| find_null(x, &format!("{path}.{k}"))),
        _ => None,
    }
}

/// Serializes the report with two-space indentation and a trailing newline.
pub fn render(config: &RunConfig, outcome: &Outcome, generated_at: String) -> Result<String, ReportError> {
    let report = Report {
        schema: REPORT_SCHEMA,
        tool_version: env!("CARGO_PKG_VERSION"),
        generated_at,
        status: outcome.status,
        exit_code: outcome.status.exit_code(),
        config,
        result: &outcome.result,
    };
    let value = to_finite_value(&report)?;
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `report.json` and the CSV tables requested by `config` into
/// `dir`, returning the paths written.
pub fn write_outputs(
    dir: &Path,
    config: &RunConfig,
    outcome: &Outcome,
    generated_at: String,
) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    if config.output.formats.contains(&Format::Json) {
        let path = dir.join("report.json");
        let text = render(config, outcome, generated_at)?;
        fs::write(&path, text).map_err(io(&path))?;
        written.push(path);
    }
    if config.output.formats.contains(&Format::Csv) {
        for table in &outcome.tables {
            let path = dir.join(table.file_name());
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(&table.header)?;
            for row in &table.rows {
                w.write_record(row)?;
            }
            w.flush().map_err(io(&path))?;
            written.push(path);
        }
    }
    Ok(written)
}
