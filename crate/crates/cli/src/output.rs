//! Atomic file output: everything is written to a temp file in the target
//! directory and renamed into place, so a crashed run never leaves a
//! partial output behind.

use std::io::Write;
use std::path::Path;

use davir_core::{Error, Result};
use serde::Serialize;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .map_err(|e| io_err(path, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.flush().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

pub fn write_jsonl_atomic<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    davir_core::corpus_io::write_jsonl(&mut buf, records).map_err(|e| io_err(path, e))?;
    write_atomic(path, &buf)
}

/// Report output format for the diagnostic subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Emit a rendered report to a file (atomically) or stdout.
pub fn emit_report(output: Option<&Path>, rendered: &str) -> Result<()> {
    match output {
        Some(path) => write_atomic(path, rendered.as_bytes()),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

/// Flatten a JSON object into `header\nrow` CSV. Nested objects flatten
/// with dotted keys; strings containing commas or quotes are quoted.
pub fn json_to_csv(value: &serde_json::Value) -> String {
    fn flatten(prefix: &str, value: &serde_json::Value, out: &mut Vec<(String, String)>) {
        match value {
            serde_json::Value::Object(map) => {
                for (key, inner) in map {
                    let name = if prefix.is_empty() {
                        key.clone()
                    } else {
                        format!("{prefix}.{key}")
                    };
                    flatten(&name, inner, out);
                }
            }
            serde_json::Value::Null => out.push((prefix.to_string(), String::new())),
            serde_json::Value::String(s) => {
                let quoted = if s.contains(',') || s.contains('"') {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                };
                out.push((prefix.to_string(), quoted));
            }
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut cells = Vec::new();
    flatten("", value, &mut cells);
    let header: Vec<&str> = cells.iter().map(|(k, _)| k.as_str()).collect();
    let row: Vec<&str> = cells.iter().map(|(_, v)| v.as_str()).collect();
    format!("{}\n{}\n", header.join(","), row.join(","))
}

/// Render a serializable report in the requested format.
pub fn render_report<T: Serialize>(report: &T, format: ReportFormat) -> Result<String> {
    let value = serde_json::to_value(report).map_err(|e| Error::InvalidParameter {
        name: "report",
        reason: e.to_string(),
    })?;
    Ok(match format {
        ReportFormat::Json => format!("{:#}\n", value),
        ReportFormat::Csv => json_to_csv(&value),
    })
}
