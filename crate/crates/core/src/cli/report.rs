//! Report envelope and the three output encodings.
//!
//! Rows are ordered `(column, cell)` lists so JSON and CSV carry the same
//! data in the same order. Floats are rounded to six decimals in both.

use std::io::{self, Write};

use clap::ValueEnum;
use serde_json::{json, Map, Value};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Bool(bool),
    Text(String),
    Null,
}

impl Cell {
    fn round6(f: f64) -> f64 {
        (f * 1e6).round() / 1e6
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(f) => json!(Self::round6(*f)),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
            Cell::Null => Value::Null,
        }
    }

    fn to_text(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(f) => format!("{:.6}", Self::round6(*f)),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Null => String::new(),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v.into())
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row(pub Vec<(&'static str, Cell)>);

impl Row {
    pub fn new() -> Self {
        Row(Vec::new())
    }

    pub fn with(mut self, col: &'static str, cell: impl Into<Cell>) -> Self {
        self.0.push((col, cell.into()));
        self
    }

    fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (k, v) in &self.0 {
            m.insert((*k).to_string(), v.to_json());
        }
        Value::Object(m)
    }
}

#[derive(Debug, Clone)]
pub struct Envelope {
    pub command: &'static str,
    pub parameters: Row,
    pub rows: Vec<Row>,
    pub pass: bool,
    pub exit_code: i32,
    /// Free-form summary lines, also emitted as `notes` in JSON.
    pub notes: Vec<String>,
    /// Extra structured detail (counterexamples, mismatch lists).
    pub details: Map<String, Value>,
    pub elapsed_ms: u128,
}

impl Envelope {
    pub fn new(command: &'static str, parameters: Row) -> Self {
        Envelope {
            command,
            parameters,
            rows: Vec::new(),
            pass: true,
            exit_code: 0,
            notes: Vec::new(),
            details: Map::new(),
            elapsed_ms: 0,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut summary = Map::new();
        summary.insert("pass".into(), json!(self.pass));
        summary.insert("exit_code".into(), json!(self.exit_code));
        summary.insert("notes".into(), json!(self.notes));
        for (k, v) in &self.details {
            summary.insert(k.clone(), v.clone());
        }
        json!({
            "tool_version": TOOL_VERSION,
            "command": self.command,
            "parameters": self.parameters.to_json(),
            "rows": self.rows.iter().map(Row::to_json).collect::<Vec<_>>(),
            "summary": Value::Object(summary),
            "elapsed_ms": self.elapsed_ms as u64,
        })
    }

    /// Header plus data rows. Summary lines go to the diagnostic stream.
    pub fn write_csv(&self, out: &mut dyn Write) -> io::Result<()> {
        if let Some(first) = self.rows.first() {
            let header: Vec<&str> = first.0.iter().map(|(k, _)| *k).collect();
            writeln!(out, "{}", header.join(","))?;
        }
        for row in &self.rows {
            let cells: Vec<String> = row.0.iter().map(|(_, c)| c.to_text()).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn write_human(&self, out: &mut dyn Write) -> io::Result<()> {
        let params: Vec<String> = self.parameters.0.iter().map(|(k, v)| format!("{k}={}", v.to_text())).collect();
        writeln!(out, "{} ({})", self.command, params.join(" "))?;
        if let Some(first) = self.rows.first() {
            let header: Vec<&str> = first.0.iter().map(|(k, _)| *k).collect();
            let body: Vec<Vec<String>> =
                self.rows.iter().map(|r| r.0.iter().map(|(_, c)| c.to_text()).collect()).collect();
            let widths: Vec<usize> = header
                .iter()
                .enumerate()
                .map(|(i, h)| body.iter().map(|r| r[i].len()).chain([h.len()]).max().unwrap_or(0))
                .collect();
            let line = |cells: Vec<&str>| {
                cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
            };
            writeln!(out, "{}", line(header.clone()))?;
            for r in &body {
                writeln!(out, "{}", line(r.iter().map(String::as_str).collect()))?;
            }
        }
        for n in &self.notes {
            writeln!(out, "{n}")?;
        }
        writeln!(out, "{}", if self.pass { "PASS" } else { "FAIL" })
    }

    pub fn emit(&self, format: Format, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.to_json())?;
                writeln!(out)
            }
            Format::Csv => {
                self.write_csv(out)?;
                for n in &self.notes {
                    writeln!(err, "# {n}")?;
                }
                writeln!(err, "# pass={} exit_code={} elapsed_ms={}", self.pass, self.exit_code, self.elapsed_ms)
            }
            Format::Human => {
                self.write_human(out)?;
                writeln!(err, "elapsed {} ms", self.elapsed_ms)
            }
        }
    }
}
