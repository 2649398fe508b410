//! Artifact serialization: fixed-precision floats, CSV/JSON table writers,
//! and the per-run manifest.
//!
//! Every float is printed through [`fmt_g12`] so reruns are byte-identical;
//! serde_json's shortest-roundtrip float notation is deliberately avoided.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use ddm_core::criteria::{Cell, Table};
use sha2::{Digest, Sha256};

use crate::CliError;

/// 12 significant digits, scientific notation, fixed width.
pub fn fmt_g12(x: f64) -> String {
    if x == 0.0 {
        // Normalize -0 so sign noise never leaks into artifacts.
        return "0.00000000000e0".into();
    }
    format!("{x:.11e}")
}

fn cell_str(c: &Cell) -> String {
    match c {
        Cell::Int(i) => i.to_string(),
        Cell::Float(f) => fmt_g12(*f),
        Cell::Text(t) => csv_quote(t),
        Cell::Unbounded => "unbounded".into(),
    }
}

/// RFC 4180 quoting; only text cells can need it.
fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn table_to_csv(t: &Table) -> String {
    let mut s = t.columns.join(",");
    s.push('\n');
    for row in &t.rows {
        let cells: Vec<String> = row.iter().map(cell_str).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn cell_to_jval(c: &Cell) -> JVal {
    match c {
        Cell::Int(i) => JVal::Int(*i),
        Cell::Float(f) => JVal::Num(*f),
        Cell::Text(t) => JVal::Str(t.clone()),
        Cell::Unbounded => JVal::Str("unbounded".into()),
    }
}

pub fn table_to_jval(t: &Table) -> JVal {
    JVal::Obj(vec![
        (
            "columns".into(),
            JVal::Arr(t.columns.iter().map(|c| JVal::Str(c.clone())).collect()),
        ),
        (
            "rows".into(),
            JVal::Arr(
                t.rows
                    .iter()
                    .map(|r| JVal::Arr(r.iter().map(cell_to_jval).collect()))
                    .collect(),
            ),
        ),
    ])
}

/// JSON value with insertion-ordered object keys and [`fmt_g12`] floats.
pub enum JVal {
    Bool(bool),
    Int(i64),
    UInt(u64),
    Num(f64),
    Str(String),
    Arr(Vec<JVal>),
    Obj(Vec<(String, JVal)>),
}

impl JVal {
    pub fn obj(pairs: Vec<(&str, JVal)>) -> JVal {
        JVal::Obj(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }
}

fn escape_json(s: &str, out: &mut String) {
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn write_jval(v: &JVal, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    let inner = "  ".repeat(indent + 1);
    match v {
        JVal::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        JVal::Int(i) => {
            let _ = write!(out, "{i}");
        }
        JVal::UInt(u) => {
            let _ = write!(out, "{u}");
        }
        JVal::Num(x) => {
            // JSON has no Infinity/NaN; such a value reaching the writer is a bug.
            assert!(x.is_finite(), "non-finite float in JSON artifact");
            out.push_str(&fmt_g12(*x));
        }
        JVal::Str(s) => escape_json(s, out),
        JVal::Arr(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            let flat = items
                .iter()
                .all(|i| !matches!(i, JVal::Arr(_) | JVal::Obj(_)));
            if flat {
                out.push('[');
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_jval(item, indent, out);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (k, item) in items.iter().enumerate() {
                    out.push_str(&inner);
                    write_jval(item, indent + 1, out);
                    if k + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                out.push_str(&pad);
                out.push(']');
            }
        }
        JVal::Obj(pairs) => {
            if pairs.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (k, (key, val)) in pairs.iter().enumerate() {
                out.push_str(&inner);
                escape_json(key, out);
                out.push_str(": ");
                write_jval(val, indent + 1, out);
                if k + 1 < pairs.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad);
            out.push('}');
        }
    }
}

pub fn to_json(v: &JVal) -> String {
    let mut s = String::new();
    write_jval(v, 0, &mut s);
    s.push('\n');
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output format for tabular artifacts.
#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Collects artifacts into the output directory and finishes with a
/// manifest listing each file's sha256.
pub struct Emitter {
    dir: PathBuf,
    format: Format,
    /// File stems to keep; empty keeps everything.
    filter: Vec<String>,
    written: Vec<(String, String)>,
}

impl Emitter {
    pub fn new(dir: PathBuf, format: Format, filter: Vec<String>) -> Result<Self, CliError> {
        fs::create_dir_all(&dir)?;
        Ok(Emitter {
            dir,
            format,
            filter,
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        let stem = name.split('.').next().unwrap_or(name);
        if !self.filter.is_empty() && !self.filter.iter().any(|f| f == stem) {
            return Ok(());
        }
        fs::write(self.dir.join(name), content)?;
        self.written.push((name.to_string(), sha256_hex(content.as_bytes())));
        Ok(())
    }

    /// Writes a table as `<stem>.csv` or `<stem>.json` per the run format.
    pub fn write_table(&mut self, stem: &str, table: &Table) -> Result<(), CliError> {
        match self.format {
            Format::Csv => self.write(&format!("{stem}.csv"), &table_to_csv(table)),
            Format::Json => self.write(&format!("{stem}.json"), &to_json(&table_to_jval(table))),
        }
    }

    pub fn write_json(&mut self, name: &str, v: &JVal) -> Result<(), CliError> {
        self.write(name, &to_json(v))
    }

    /// Writes `manifest.json` last; `outputs` is sorted by file name.
    /// The timestamp comes from SOURCE_DATE_EPOCH (0 when unset or
    /// malformed), never from the wall clock.
    pub fn finish(mut self, command: &str, scenario_hash: &str, seed: u64) -> Result<(), CliError> {
        self.written.sort();
        let timestamp = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|s| s.parse::<u64>().ok())
            .unwrap_or(0);
        let outputs = self
            .written
            .iter()
            .map(|(file, hash)| {
                JVal::obj(vec![
                    ("file", JVal::Str(file.clone())),
                    ("sha256", JVal::Str(hash.clone())),
                ])
            })
            .collect();
        let manifest = JVal::obj(vec![
            ("tool_version", JVal::Str(env!("CARGO_PKG_VERSION").into())),
            ("command", JVal::Str(command.into())),
            ("scenario_hash", JVal::Str(scenario_hash.into())),
            ("seed", JVal::UInt(seed)),
            ("timestamp", JVal::UInt(timestamp)),
            ("outputs", JVal::Arr(outputs)),
        ]);
        fs::write(self.dir.join("manifest.json"), to_json(&manifest))?;
        Ok(())
    }
}
