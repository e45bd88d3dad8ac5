//! Tabular output with a provenance header, as CSV or JSON lines.

use std::fmt::Write;

use serde_json::{Map, Value};

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Nine significant digits; non-finite values as `inf`, `-inf` or `nan`.
pub fn fmt_num(v: f64) -> String {
    subrayleigh::information::fmt_num(v)
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => fmt_num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => Value::from(*v),
            Cell::Num(v) => Value::from(fmt_num(*v)),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.clone()),
        }
    }
}

/// Result table of one command.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra `key: value` lines for the header (fits, flags, methods).
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }
}

/// Output encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    JsonLines,
}

pub fn render(table: &Table, header: &[(String, String)], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            for (k, v) in header.iter().chain(&table.notes) {
                let _ = writeln!(out, "# {k}: {v}");
            }
            let _ = writeln!(out, "{}", table.columns.join(","));
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                let _ = writeln!(out, "{}", cells.join(","));
            }
        }
        Format::JsonLines => {
            let mut h = Map::new();
            for (k, v) in header.iter().chain(&table.notes) {
                h.insert(k.clone(), Value::from(v.clone()));
            }
            let mut first = Map::new();
            first.insert("header".into(), Value::Object(h));
            let _ = writeln!(out, "{}", Value::Object(first));
            for row in &table.rows {
                let obj: Map<String, Value> = table.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                let _ = writeln!(out, "{}", Value::Object(obj));
            }
        }
    }
    out
}
